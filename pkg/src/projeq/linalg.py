"""Dense real/complex matrix kernels with strict field discipline.

Everything downstream (representations, invariant-subspace solvers, the
networks) runs on plain numpy arrays in double precision.  The field of a
matrix is its dtype: float64 arrays live over R, complex128 arrays over C.
Mixing the two fields is an error rather than a silent promotion -- the
structure of the twisted invariance problems genuinely differs between the
two fields, so an accidental promotion would hide bugs.

Nullspaces and column spaces are computed by row reduction and pivoted
Gram-Schmidt.  No eigendecomposition or SVD is used anywhere in the
project; at the matrix sizes that occur here (a few hundred rows at most)
elimination with partial pivoting plus re-orthogonalization is entirely
adequate.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10

REAL = "real"
COMPLEX = "complex"


class FieldMismatchError(TypeError):
    """Raised when an operation mixes a real and a complex operand."""


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


def field_of(a: np.ndarray) -> str:
    """Return the field tag (``"real"`` or ``"complex"``) of an array."""
    a = np.asarray(a)
    if np.issubdtype(a.dtype, np.complexfloating):
        return COMPLEX
    return REAL


def as_field(a, field: str) -> np.ndarray:
    """Coerce ``a`` to float64 or complex128 according to ``field``."""
    dtype = np.complex128 if field == COMPLEX else np.float64
    if field == REAL and field_of(np.asarray(a)) == COMPLEX:
        raise FieldMismatchError("cannot store complex values in a real matrix")
    return np.asarray(a, dtype=dtype)


def check_same_field(a: np.ndarray, b: np.ndarray) -> str:
    fa, fb = field_of(a), field_of(b)
    if fa != fb:
        raise FieldMismatchError(f"field mismatch: {fa} vs {fb}")
    return fa


def check_finite(a: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit shape and field checks."""
    a, b = np.asarray(a), np.asarray(b)
    check_same_field(a, b)
    if a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul shapes {a.shape} x {b.shape}")
    return a @ b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product in lexicographic index order.

    Entry ((i * b.rows + p), (j * b.cols + q)) equals a[i, j] * b[p, q].
    """
    a, b = np.asarray(a), np.asarray(b)
    check_same_field(a, b)
    return np.kron(a, b)


def conj_transpose(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def orthonormalize(vectors, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Gram-Schmidt with one re-orthogonalization pass.

    Input vectors that are (numerically) dependent on the earlier ones are
    dropped.  The output satisfies <v_i, v_j> = delta_ij to ~1e-14.
    """
    basis: list[np.ndarray] = []
    if len(vectors) == 0:
        return basis
    scale = max(np.linalg.norm(np.asarray(v)) for v in vectors)
    if scale == 0.0:
        return basis
    for v in vectors:
        w = np.asarray(v).copy()
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for u in basis:
                w = w - u * np.vdot(u, w)
        n = np.linalg.norm(w)
        if n > tol * scale:
            basis.append(w / n)
    return basis


def rref_nullspace(a: np.ndarray, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the (numerical) nullspace of ``a``.

    Row reduction with partial pivoting; a pivot candidate below
    ``tol * max|a|`` is treated as zero.  The free-column vectors produced
    by back substitution are orthonormalized before returning.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("rref_nullspace expects a 2-d array")
    m, n = a.shape
    if n == 0:
        return []
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        eye = np.eye(n, dtype=a.dtype if a.size else np.float64)
        return [eye[:, j].copy() for j in range(n)]
    r = a.astype(np.promote_types(a.dtype, np.float64)).copy()
    threshold = tol * scale
    pivot_cols: list[int] = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        p = row + int(np.argmax(np.abs(r[row:, col])))
        if np.abs(r[p, col]) <= threshold:
            continue
        if p != row:
            r[[row, p]] = r[[p, row]]
        r[row] = r[row] / r[row, col]
        other = np.concatenate([np.arange(row), np.arange(row + 1, m)])
        r[other] -= np.outer(r[other, col], r[row])
        pivot_cols.append(col)
        row += 1
    free_cols = [c for c in range(n) if c not in pivot_cols]
    vectors = []
    for fc in free_cols:
        v = np.zeros(n, dtype=r.dtype)
        v[fc] = 1.0
        for i, pc in enumerate(pivot_cols):
            v[pc] = -r[i, fc]
        vectors.append(v)
    return orthonormalize(vectors, tol)


def column_space_basis(a: np.ndarray, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the column space via pivoted Gram-Schmidt.

    At each step the remaining column with the largest residual norm is
    selected; columns whose residual drops below ``tol * max column norm``
    are discarded.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("column_space_basis expects a 2-d array")
    cols = [a[:, j].astype(np.promote_types(a.dtype, np.float64)) for j in range(a.shape[1])]
    if not cols:
        return []
    scale = max(np.linalg.norm(c) for c in cols)
    if scale == 0.0:
        return []
    threshold = tol * scale
    basis: list[np.ndarray] = []
    remaining = list(cols)
    while remaining:
        norms = [np.linalg.norm(c) for c in remaining]
        k = int(np.argmax(norms))
        if norms[k] <= threshold:
            break
        u = remaining.pop(k)
        for prev in basis:  # residuals were already reduced; one clean-up pass
            u = u - prev * np.vdot(prev, u)
        u = _unit(u)
        basis.append(u)
        remaining = [c - u * np.vdot(u, c) for c in remaining]
    return basis


def project_onto_span(basis, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the span of an orthonormal basis."""
    out = np.zeros_like(np.asarray(v, dtype=np.promote_types(np.asarray(v).dtype, np.float64)))
    for u in basis:
        out = out + u * np.vdot(u, v)
    return out


def subspace_equal(b1, b2, tol: float = 1e-9) -> bool:
    """True iff two orthonormal families span the same subspace.

    Checked by mutual projection: every vector of each basis must project
    into the other span with residual below ``tol``.
    """
    b1, b2 = list(b1), list(b2)
    if len(b1) != len(b2):
        return False
    if not b1:
        return True
    dim = len(np.asarray(b1[0]))
    for v in list(b1) + list(b2):
        if len(np.asarray(v)) != dim:
            raise DimensionError("subspace_equal: vectors of unequal dimension")
    for v in b1:
        if np.linalg.norm(v - project_onto_span(b2, v)) > tol:
            return False
    for v in b2:
        if np.linalg.norm(v - project_onto_span(b1, v)) > tol:
            return False
    return True


def canonical_phase(v: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Rescale a unit vector so its first nonzero component is real positive.

    Makes serialized bases reproducible run to run.
    """
    v = np.asarray(v)
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v
    lead = v[idx[0]]
    return v * (np.abs(lead) / lead)
