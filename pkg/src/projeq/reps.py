"""Linear representations stored as full per-element matrix tables.

Every representation keeps one dense (dim x dim) matrix per group element,
so invariance solves and structural checks can be exhaustive.  Construction
validates the homomorphism property rho(g) rho(h) = rho(gh) on all pairs
(invertibility follows, since rho(g) rho(g^-1) = id).  Permutation-matrix
representations are detected and validated by index composition instead of
matrix products, which keeps the larger tensor-power cases fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from projeq.groups import (
    Character,
    FiniteGroup,
    GroupError,
    Subgroup,
    make_cyclic,
    make_symmetric,
    make_vierer,
    same_group,
)
from projeq.linalg import COMPLEX, REAL, FieldMismatchError, field_of, kron

HOM_TOL = 1e-10
TENSOR_DIM_CAP = 4096


class RepError(ValueError):
    """Raised for inconsistent representation constructions."""


@dataclass(frozen=True, eq=False)
class LinearRep:
    """A finite-group representation as an (order, dim, dim) matrix stack."""

    group: FiniteGroup
    matrices: np.ndarray
    field: str
    name: str = "rep"

    def __post_init__(self):
        dtype = np.complex128 if self.field == COMPLEX else np.float64
        mats = np.asarray(self.matrices)
        if self.field == REAL and field_of(mats) == COMPLEX:
            raise FieldMismatchError("real representation given complex matrices")
        mats = np.ascontiguousarray(mats.astype(dtype))
        object.__setattr__(self, "matrices", mats)
        n = self.group.order
        if mats.ndim != 3 or mats.shape[0] != n or mats.shape[1] != mats.shape[2]:
            raise RepError(f"matrix table has shape {mats.shape}, expected ({n}, d, d)")
        if not np.all(np.isfinite(mats.view(np.float64))):
            raise RepError("matrix table contains non-finite entries")
        d = mats.shape[1]
        if np.max(np.abs(mats[self.group.identity] - np.eye(d))) > HOM_TOL:
            raise RepError("identity element must map to the identity matrix")
        perms = _as_permutations(mats)
        object.__setattr__(self, "_perms", perms)
        _check_homomorphism(self.group, mats, perms)

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def is_permutation(self) -> bool:
        return self._perms is not None

    def matrix(self, g: int) -> np.ndarray:
        return self.matrices[g]

    def inverse_matrix(self, g: int) -> np.ndarray:
        # rho(g)^-1 = rho(g^-1), read off the table instead of inverting
        return self.matrices[self.group.inv(g)]

    def apply(self, g: int, v: np.ndarray) -> np.ndarray:
        return self.matrices[g] @ v

    def __repr__(self):
        return f"LinearRep({self.name}, group={self.group.name}, dim={self.dim}, {self.field})"

    def to_json(self) -> dict:
        if self.field == COMPLEX:
            mats = [[[[float(x.real), float(x.imag)] for x in row] for row in m] for m in self.matrices]
        else:
            mats = self.matrices.tolist()
        return {
            "name": self.name,
            "group": self.group.name,
            "dim": self.dim,
            "field": self.field,
            "matrices": mats,
        }


def _as_permutations(mats: np.ndarray) -> np.ndarray | None:
    """Column-to-row index arrays when every matrix is a 0/1 permutation."""
    if field_of(mats) == COMPLEX:
        if np.any(mats.imag != 0.0):
            return None
        real = mats.real
    else:
        real = mats
    if not np.all((real == 0.0) | (real == 1.0)):
        return None
    if not (np.all(real.sum(axis=1) == 1.0) and np.all(real.sum(axis=2) == 1.0)):
        return None
    return real.argmax(axis=1)  # perms[g, j] = row of the 1 in column j


def _check_homomorphism(group: FiniteGroup, mats: np.ndarray, perms: np.ndarray | None) -> None:
    n = group.order
    if perms is not None:
        for g in range(n):
            composed = perms[g][perms]  # (n, d): (pi_g o pi_h)(j)
            if not np.array_equal(composed, perms[group.cayley[g]]):
                raise RepError("matrix table violates the homomorphism law")
        return
    for g in range(n):
        products = np.matmul(mats[g], mats)  # (n, d, d)
        defect = np.max(np.abs(products - mats[group.cayley[g]]))
        if defect > HOM_TOL:
            raise RepError(f"matrix table violates the homomorphism law (defect {defect:.2e})")


def homomorphism_defect(rep: LinearRep) -> float:
    """Largest |rho(g) rho(h) - rho(gh)| entry over all pairs."""
    mats, cayley = rep.matrices, rep.group.cayley
    worst = 0.0
    for g in range(rep.group.order):
        worst = max(worst, float(np.max(np.abs(np.matmul(mats[g], mats) - mats[cayley[g]]))))
    return worst


def _perm_matrices(perms: np.ndarray, dtype=np.float64) -> np.ndarray:
    n, d = perms.shape
    mats = np.zeros((n, d, d), dtype=dtype)
    cols = np.broadcast_to(np.arange(d), (n, d))
    mats[np.arange(n)[:, None], perms, cols] = 1.0
    return mats


def rep_trivial(group: FiniteGroup, dim: int = 1, field: str = REAL) -> LinearRep:
    mats = np.broadcast_to(np.eye(dim), (group.order, dim, dim)).copy()
    return LinearRep(group, mats, field, name=f"trivial{dim}")


def rep_cyclic_shift(n: int, field: str = REAL) -> LinearRep:
    """Z_n acting on F^n by (rho(l) v)_k = v_{k - l mod n}."""
    group = make_cyclic(n)
    idx = np.arange(n)
    # basis vectors move forward: rho(l) e_j = e_{j + l}, i.e. pi_l(j) = j + l
    perms = (idx[None, :] + idx[:, None]) % n
    return LinearRep(group, _perm_matrices(perms), field, name=f"shift{n}")


def rep_flip_image(h: int, w: int, field: str = REAL) -> LinearRep:
    """The Vierergroup acting on row-major flattened h x w images.

    Element (1,0) reverses the row order (vertical flip), (0,1) reverses
    the column order (horizontal flip), (1,1) does both.
    """
    if h < 1 or w < 1:
        raise RepError("image dimensions must be positive")
    group = make_vierer()
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    flat = (rows * w + cols).reshape(-1)
    perms = np.empty((4, h * w), dtype=np.int64)
    for g, (fr, fc) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
        r = (h - 1 - rows) if fr else rows
        c = (w - 1 - cols) if fc else cols
        target = (r * w + c).reshape(-1)
        perms[g, flat] = target  # e_(row,col) -> e_(flipped row,col)
    return LinearRep(group, _perm_matrices(perms), field, name=f"flip{h}x{w}")


def rep_permutation_tensor(n: int, k: int, field: str = REAL) -> LinearRep:
    """S_n on (F^n)^(tensor k): (rho(s) T)_I = T_{s^-1(I)} on multi-indices."""
    if n**k > TENSOR_DIM_CAP:
        raise RepError(f"tensor dimension {n}^{k} exceeds the cap {TENSOR_DIM_CAP}")
    group = make_symmetric(n)
    dim = n**k
    powers = n ** np.arange(k - 1, -1, -1, dtype=np.int64)
    digits = (np.arange(dim)[:, None] // powers) % n  # multi-index of each flat index
    order = group.order
    perms = np.empty((order, dim), dtype=np.int64)
    for g in range(order):
        sigma = np.array([int(c) for c in group.element_labels[g]])
        # basis tensor e_I maps to e_{sigma(I)} (entrywise application)
        perms[g] = (sigma[digits] @ powers)
    return LinearRep(group, _perm_matrices(perms), field, name=f"S{n}_tensor{k}")


def rep_twist(r: LinearRep, e: Character) -> LinearRep:
    """Scale rho(g) by epsilon(g); the field widens to complex if needed."""
    if not same_group(r.group, e.group):
        raise GroupError("representation and character live on different groups")
    field = COMPLEX if (r.field == COMPLEX or e.field == COMPLEX) else REAL
    vals = e.values.astype(np.complex128 if field == COMPLEX else np.float64)
    return LinearRep(r.group, vals[:, None, None] * r.matrices.astype(vals.dtype), field, name=f"{r.name}^twist")


def _check_compatible(a: LinearRep, b: LinearRep) -> None:
    if not same_group(a.group, b.group):
        raise GroupError("representations live on different groups")
    if a.field != b.field:
        raise FieldMismatchError(f"representation field mismatch: {a.field} vs {b.field}")


def rep_hom(rv: LinearRep, rw: LinearRep) -> LinearRep:
    """The induced representation on Hom(V, W), acting on row-major vec(A).

    rho(g) A = rho_W(g) A rho_V(g)^-1, realized as
    kron(rho_W(g), rho_V(g^-1)^T) under row-major vectorization.
    """
    _check_compatible(rv, rw)
    n = rv.group.order
    inv = rv.group.inverse
    mats = np.stack([kron(rw.matrices[g], rv.matrices[inv[g]].T) for g in range(n)])
    return LinearRep(rv.group, mats, rv.field, name=f"hom({rv.name},{rw.name})")


def rep_direct_sum(a: LinearRep, b: LinearRep) -> LinearRep:
    _check_compatible(a, b)
    n, da, db = a.group.order, a.dim, b.dim
    dtype = a.matrices.dtype
    mats = np.zeros((n, da + db, da + db), dtype=dtype)
    mats[:, :da, :da] = a.matrices
    mats[:, da:, da:] = b.matrices
    return LinearRep(a.group, mats, a.field, name=f"({a.name}+{b.name})")


def rep_tensor(a: LinearRep, b: LinearRep) -> LinearRep:
    _check_compatible(a, b)
    mats = np.stack([kron(a.matrices[g], b.matrices[g]) for g in range(a.group.order)])
    return LinearRep(a.group, mats, a.field, name=f"({a.name}x{b.name})")


def rep_restrict(r: LinearRep, sub: Subgroup, name: str | None = None) -> LinearRep:
    """Restriction of a representation to a subgroup (reindexed as a group)."""
    if not same_group(sub.parent, r.group):
        raise GroupError("subgroup does not belong to the representation's group")
    subgroup = sub.as_group(name)
    return LinearRep(subgroup, r.matrices[list(sub.members)], r.field, name=f"{r.name}|{subgroup.name}")
