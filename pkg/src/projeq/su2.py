"""Quaternion model of SU(2), its irreps up to l = 2, and Clebsch-Gordan tables.

SU(2) elements are unit quaternions q = (a, v) with the Hamilton product

    (a, v) (b, w) = (a b - v.w,  a w + b v + v x w).

The covering map onto SO(3) sends q to the rotation x -> q (0, x) q^-1;
q and -q cover the same rotation.

Irreps are labelled by l in {0, 1/2, 1, 3/2, 2} with dimension 2l + 1.
The l = 1/2 matrix convention is fixed explicitly below; l = 1 is the
rotation matrix itself (integer levels act on real coordinates); l = 3/2
and l = 2 are carved out of tensor products via the top Clebsch-Gordan
block.  The Clebsch-Gordan matrices are built by the standard ladder
recursion with Condon-Shortley phases and then conjugated into the real
basis on the integer levels, so network code never sees complex vectors
for integer-l features.  Each block's global phase is canonicalized, which
keeps serialized tables reproducible and leaves all conjugation identities
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from projeq.linalg import COMPLEX, REAL, kron, rref_nullspace

QUAT_TOL = 1e-12
ROTATION_TOL = 1e-10

SUPPORTED_TWO_L = (0, 1, 2, 3, 4)


class SU2Error(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UnitQuaternion:
    """q = (a, v): real part a, vector part v; renormalized on construction."""

    a: float
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64).reshape(3)
        norm = float(np.sqrt(self.a * self.a + v @ v))
        if norm == 0.0 or not np.isfinite(norm):
            raise SU2Error("cannot normalize a zero or non-finite quaternion")
        object.__setattr__(self, "a", float(self.a) / norm)
        object.__setattr__(self, "v", v / norm)
        self.v.setflags(write=False)

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.a], self.v])

    def __neg__(self) -> "UnitQuaternion":
        return UnitQuaternion(-self.a, -self.v)

    def conj(self) -> "UnitQuaternion":
        return UnitQuaternion(self.a, -self.v)

    inverse = conj

    def __repr__(self):
        return f"UnitQuaternion({self.a:+.4f}, [{self.v[0]:+.4f}, {self.v[1]:+.4f}, {self.v[2]:+.4f}])"


QUAT_ONE = UnitQuaternion(1.0, np.zeros(3))


def quat_mul(q: UnitQuaternion, p: UnitQuaternion) -> UnitQuaternion:
    a, v = q.a, q.v
    b, w = p.a, p.v
    return UnitQuaternion(a * b - v @ w, a * w + b * v + np.cross(v, w))


def quat_distance(q: UnitQuaternion, p: UnitQuaternion) -> float:
    """Distance in SU(2) ignoring nothing; use min with -p for the SO(3) distance."""
    return float(np.linalg.norm(q.as_array() - p.as_array()))


def random_unit_quaternion(rng: np.random.Generator) -> UnitQuaternion:
    x = rng.normal(size=4)
    return UnitQuaternion(x[0], x[1:])


def quat_to_rotation(q: UnitQuaternion) -> np.ndarray:
    """The covering map: the rotation x -> q (0, x) q^-1.

    Satisfies quat_to_rotation(-q) = quat_to_rotation(q).
    """
    a, v = q.a, q.v
    cross = np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )
    return (a * a - v @ v) * np.eye(3) + 2.0 * np.outer(v, v) + 2.0 * a * cross


def check_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise SU2Error("rotation must be a 3x3 matrix")
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        raise SU2Error("matrix is not orthogonal")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise SU2Error("matrix has determinant != 1")
    return r


def rotation_to_quat(r: np.ndarray) -> UnitQuaternion:
    """Inverse of the covering map with a fixed sign convention.

    Returns the preimage with a >= 0; if a is (numerically) zero the first
    nonzero vector component is made positive.
    """
    r = check_rotation(r)
    t = np.trace(r)
    # Shepperd-style branch on the largest diagonal-ish quantity for stability
    candidates = [t, r[0, 0], r[1, 1], r[2, 2]]
    case = int(np.argmax(candidates))
    if case == 0:
        s = np.sqrt(t + 1.0) * 2.0
        a = 0.25 * s
        v = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / s
    elif case == 1:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        a = (r[2, 1] - r[1, 2]) / s
        v = np.array([0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s])
    elif case == 2:
        s = np.sqrt(1.0 - r[0, 0] + r[1, 1] - r[2, 2]) * 2.0
        a = (r[0, 2] - r[2, 0]) / s
        v = np.array([(r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s])
    else:
        s = np.sqrt(1.0 - r[0, 0] - r[1, 1] + r[2, 2]) * 2.0
        a = (r[1, 0] - r[0, 1]) / s
        v = np.array([(r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s])
    q = UnitQuaternion(a, v)
    if q.a < -QUAT_TOL:
        q = -q
    elif abs(q.a) <= QUAT_TOL:
        nz = np.flatnonzero(np.abs(q.v) > QUAT_TOL)
        if nz.size and q.v[nz[0]] < 0:
            q = -q
    return q


def quat_sqrt(q: UnitQuaternion) -> UnitQuaternion:
    """Half-angle square root: q = (cos 2t, sin 2t u) -> (cos t, sin t u).

    For q = (-1, 0) the rotation axis is ambiguous; u = e1 by convention.
    """
    angle2 = float(np.arccos(np.clip(q.a, -1.0, 1.0)))  # in [0, pi]
    vnorm = float(np.linalg.norm(q.v))
    if vnorm < QUAT_TOL:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = q.v / vnorm
    t = angle2 / 2.0
    return UnitQuaternion(np.cos(t), np.sin(t) * u)


def commutator_decompose(q: UnitQuaternion) -> tuple[UnitQuaternion, UnitQuaternion]:
    """Write q as the commutator r s r^-1 s^-1.

    r is the square root of q; s = (0, n) for a deterministic unit n
    orthogonal to r's vector part (e2 if that part vanishes).  Conjugating
    r by s inverts it, so r s r^-1 s^-1 = r * r = q.
    """
    r = quat_sqrt(q)
    vnorm = float(np.linalg.norm(r.v))
    if vnorm < QUAT_TOL:
        n = np.array([0.0, 1.0, 0.0])
    else:
        u = r.v / vnorm
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(u)))] = 1.0
        n = np.cross(u, axis)
        n = n / np.linalg.norm(n)
    s = UnitQuaternion(0.0, n)
    return r, s


def reconstruct_commutator(r: UnitQuaternion, s: UnitQuaternion) -> UnitQuaternion:
    return quat_mul(quat_mul(r, s), quat_mul(r.inverse(), s.inverse()))


# ---------------------------------------------------------------------------
# Irreducible representations


@dataclass(frozen=True)
class IrrepLevel:
    two_l: int

    def __post_init__(self):
        if self.two_l not in SUPPORTED_TWO_L:
            raise SU2Error(f"unsupported irrep level {self.two_l / 2}")

    @property
    def l(self) -> float:
        return self.two_l / 2.0

    @property
    def dim(self) -> int:
        return self.two_l + 1

    @property
    def field(self) -> str:
        return REAL if self.two_l % 2 == 0 else COMPLEX

    @classmethod
    def of(cls, l) -> "IrrepLevel":
        if isinstance(l, IrrepLevel):
            return l
        two_l = int(round(2 * float(l)))
        if abs(2 * float(l) - two_l) > 1e-12:
            raise SU2Error(f"irrep level must be a half-integer, got {l}")
        return cls(two_l)


def wigner_half(q: UnitQuaternion) -> np.ndarray:
    """The defining 2x2 matrix: a I - i (v . sigma)."""
    a, v = q.a, q.v
    return np.array(
        [
            [a - 1j * v[2], -v[1] - 1j * v[0]],
            [v[1] - 1j * v[0], a + 1j * v[2]],
        ]
    )


def _jminus(two_l: int) -> np.ndarray:
    """Lowering operator in the basis m = l, l-1, ..., -l."""
    d = two_l + 1
    l = two_l / 2.0
    out = np.zeros((d, d))
    for a in range(d - 1):
        m = l - a
        out[a + 1, a] = np.sqrt(l * (l + 1) - m * (m - 1))
    return out


@lru_cache(maxsize=None)
def _cg_complex(two_l1: int, two_l2: int) -> np.ndarray:
    """Clebsch-Gordan matrix in the complex bases, Condon-Shortley phases.

    Rows are indexed by (J, M) with J ascending from |l1 - l2| to l1 + l2
    and M descending inside each block; columns by the Kronecker pairing
    of the two factors (m1, m2 descending).
    """
    d1, d2 = two_l1 + 1, two_l2 + 1
    dim = d1 * d2
    lower = kron(_jminus(two_l1), np.eye(d2)) + kron(np.eye(d1), _jminus(two_l2))

    def support(two_j: int) -> list[int]:
        # flat column indices of pairs with m1 + m2 = J, ascending a1 (descending m1)
        out = []
        for a1 in range(d1):
            for a2 in range(d2):
                if (two_l1 - 2 * a1) + (two_l2 - 2 * a2) == two_j:
                    out.append(a1 * d2 + a2)
        return out

    blocks: dict[int, list[np.ndarray]] = {}
    two_j_max = two_l1 + two_l2
    two_j_min = abs(two_l1 - two_l2)
    for two_j in range(two_j_max, two_j_min - 2, -2):
        sup = support(two_j)
        if two_j == two_j_max:
            top = np.zeros(dim)
            top[sup[0]] = 1.0
        else:
            # orthogonal complement of the higher-J states within the M = J level
            previous = [blocks[tj][(tj - two_j) // 2] for tj in range(two_j_max, two_j, -2)]
            top = None
            for col in sup:
                cand = np.zeros(dim)
                cand[col] = 1.0
                for p in previous:
                    cand = cand - p * np.vdot(p, cand)
                norm = np.linalg.norm(cand)
                if norm > 1e-9:
                    top = cand / norm
                    break
            if top is None:
                raise SU2Error("ladder construction failed to find a top state")
            if top[sup[0]] < 0:  # Condon-Shortley: highest-m1 coefficient positive
                top = -top
        states = [top]
        j = two_j / 2.0
        m = j
        while m > -j + 1e-9:
            coeff = np.sqrt(j * (j + 1) - m * (m - 1))
            states.append(lower @ states[-1] / coeff)
            m -= 1.0
        blocks[two_j] = states

    rows = []
    for two_j in range(two_j_min, two_j_max + 2, 2):
        rows.extend(blocks[two_j])
    c = np.stack(rows)
    if np.max(np.abs(c @ c.T - np.eye(dim))) > 1e-10:
        raise SU2Error("complex Clebsch-Gordan matrix failed the unitarity check")
    c.setflags(write=False)
    return c


@lru_cache(maxsize=None)
def _wigner_complex_family():
    """Lazily built dict two_l -> function q -> complex Wigner matrix."""
    fns = {}
    fns[0] = lambda q: np.ones((1, 1), dtype=complex)
    fns[1] = lambda q: wigner_half(q)

    def make(two_l):
        c = _cg_complex(1, two_l - 1)
        top = c[-(two_l + 1) :]  # rows of the highest-J block

        def fn(q, top=top, two_l=two_l):
            lower = fns[two_l - 1](q)
            return top @ kron(wigner_half(q), lower) @ top.conj().T

        return fn

    for two_l in range(2, max(SUPPORTED_TWO_L) + 1):
        fns[two_l] = make(two_l)
    return fns


def _wigner_complex(two_l: int, q: UnitQuaternion) -> np.ndarray:
    return _wigner_complex_family()[two_l](q)


def _symmetric_traceless_basis() -> list[np.ndarray]:
    rt2, rt6 = np.sqrt(2.0), np.sqrt(6.0)
    e = np.eye(3)
    return [
        (np.outer(e[0], e[1]) + np.outer(e[1], e[0])) / rt2,
        (np.outer(e[0], e[2]) + np.outer(e[2], e[0])) / rt2,
        (np.outer(e[1], e[2]) + np.outer(e[2], e[1])) / rt2,
        (np.outer(e[0], e[0]) - np.outer(e[1], e[1])) / rt2,
        (np.outer(e[0], e[0]) + np.outer(e[1], e[1]) - 2.0 * np.outer(e[2], e[2])) / rt6,
    ]


def _real_target(two_l: int, q: UnitQuaternion) -> np.ndarray:
    """An explicitly real irrep at integer levels, used to pin the real basis."""
    if two_l == 0:
        return np.ones((1, 1))
    if two_l == 2:
        return quat_to_rotation(q)
    if two_l == 4:
        r = quat_to_rotation(q)
        basis = _symmetric_traceless_basis()
        return np.array([[np.sum(a * (r @ b @ r.T)) for b in basis] for a in basis])
    raise SU2Error("real target exists only for integer levels")


@lru_cache(maxsize=None)
def _real_transform(two_l: int) -> np.ndarray:
    """Unitary S with S D_complex(q) S^H = the real irrep, for integer levels.

    Solved as the (one-dimensional, by irreducibility) space of intertwiners
    over a fixed sample of group elements, then scaled to a unitary and
    phase-canonicalized.
    """
    if two_l % 2 != 0:
        raise SU2Error("real transforms exist only for integer levels")
    if two_l == 0:
        s = np.ones((1, 1), dtype=complex)
        s.setflags(write=False)
        return s
    d = two_l + 1
    rng = np.random.default_rng(1234)
    samples = [random_unit_quaternion(rng) for _ in range(12)]
    eye = np.eye(d, dtype=complex)
    rows = []
    for q in samples:
        dc = _wigner_complex(two_l, q)
        dr = _real_target(two_l, q).astype(complex)
        # S dc - dr S = 0, row-major vec(S)
        rows.append(kron(eye, dc.T) - kron(dr, eye))
    null = rref_nullspace(np.concatenate(rows, axis=0))
    if len(null) != 1:
        raise SU2Error(f"intertwiner space has dimension {len(null)}, expected 1")
    s = null[0].reshape(d, d) * np.sqrt(d)  # Schur: S S^H = c I; rescale to unitary
    if np.max(np.abs(s @ s.conj().T - np.eye(d))) > 1e-9:
        raise SU2Error("real-basis transform is not unitary")
    flat = s.reshape(-1)
    lead = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
    s = s * (np.abs(lead) / lead)
    s.setflags(write=False)
    return s


@dataclass(frozen=True, eq=False)
class CGTable:
    """Unitary change of basis splitting a tensor product into irrep blocks."""

    l1: IrrepLevel
    l2: IrrepLevel
    matrix: np.ndarray  # ((d1 d2), (d1 d2)), complex
    block_levels: tuple[int, ...]  # two_J, ascending
    block_offsets: tuple[int, ...]

    def block(self, l) -> np.ndarray:
        """Rows of the output block for level l."""
        two_j = IrrepLevel.of(l).two_l
        if two_j not in self.block_levels:
            raise SU2Error(f"no output block at level {two_j / 2}")
        i = self.block_levels.index(two_j)
        start = self.block_offsets[i]
        return self.matrix[start : start + two_j + 1]

    @property
    def top_block(self) -> np.ndarray:
        return self.block(self.block_levels[-1] / 2.0)

    def to_json(self) -> dict:
        return {
            "l1": self.l1.l,
            "l2": self.l2.l,
            "block_levels": [t / 2.0 for t in self.block_levels],
            "matrix": [[[float(x.real), float(x.imag)] for x in row] for row in self.matrix],
        }


@lru_cache(maxsize=None)
def clebsch_gordan(l1, l2) -> CGTable:
    """The real-basis Clebsch-Gordan table for a supported level pair.

    Integer-level factors, and integer output blocks up to the supported
    level cap, are conjugated into the real basis (so the l = 1 block of a
    vector-vector product literally carries dot/cross-product rows).
    Output blocks above the cap stay in the complex ladder basis; they
    only complete the unitary table and are discarded by all consumers.
    Each block's overall phase is canonicalized.
    """
    lv1, lv2 = IrrepLevel.of(l1), IrrepLevel.of(l2)
    c = np.array(_cg_complex(lv1.two_l, lv2.two_l), dtype=complex)
    t_in = kron(_in_transform(lv1.two_l), _in_transform(lv2.two_l))
    levels = tuple(range(abs(lv1.two_l - lv2.two_l), lv1.two_l + lv2.two_l + 2, 2))
    offsets = []
    start = 0
    out_blocks = []
    for two_j in levels:
        offsets.append(start)
        block = c[start : start + two_j + 1]
        convertible = two_j % 2 == 0 and two_j <= max(SUPPORTED_TWO_L)
        if convertible:
            block = _in_transform(two_j) @ block
        block = block @ t_in.conj().T
        flat = block.reshape(-1)
        lead = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
        block = block * (np.abs(lead) / lead)
        if convertible and lv1.two_l % 2 == 0 and lv2.two_l % 2 == 0:
            # fully integer coupling within the level cap: real up to roundoff
            imag = float(np.max(np.abs(block.imag)))
            if imag > 1e-10:
                raise SU2Error(f"integer-level block has imaginary residue {imag}")
            block = block.real.astype(complex)
        out_blocks.append(block)
        start += two_j + 1
    matrix = np.concatenate(out_blocks, axis=0)
    if np.max(np.abs(matrix @ matrix.conj().T - np.eye(matrix.shape[0]))) > 1e-10:
        raise SU2Error("Clebsch-Gordan matrix failed the unitarity check")
    matrix.setflags(write=False)
    return CGTable(lv1, lv2, matrix, levels, tuple(offsets))


def _in_transform(two_l: int) -> np.ndarray:
    return np.array(_real_transform(two_l)) if two_l % 2 == 0 else np.eye(two_l + 1, dtype=complex)


def wigner(l, q: UnitQuaternion) -> np.ndarray:
    """The irrep matrix at level l (real for integer l, complex otherwise)."""
    lv = IrrepLevel.of(l)
    if lv.two_l == 0:
        return np.ones((1, 1))
    if lv.two_l == 1:
        return wigner_half(q)
    if lv.two_l == 2:
        return quat_to_rotation(q)
    half = clebsch_gordan(0.5, (lv.two_l - 1) / 2.0)
    top = half.top_block
    out = top @ kron(wigner_half(q), wigner((lv.two_l - 1) / 2.0, q).astype(complex)) @ top.conj().T
    if lv.two_l % 2 == 0:
        imag = float(np.max(np.abs(out.imag)))
        if imag > 1e-9:
            raise SU2Error(f"integer-level Wigner matrix has imaginary residue {imag}")
        return out.real
    return out


def spherical_harmonic(l, x: np.ndarray) -> np.ndarray:
    """Direction features: level 0 is the constant [1], level 1 is x/|x|."""
    lv = IrrepLevel.of(l)
    if lv.two_l == 0:
        return np.ones(1)
    if lv.two_l == 2:
        x = np.asarray(x, dtype=np.float64).reshape(3)
        n = np.linalg.norm(x)
        if n == 0.0:
            raise SU2Error("direction feature undefined at the origin")
        return x / n
    raise SU2Error("direction features implemented for levels 0 and 1 only")


def spinor_square(s: np.ndarray) -> tuple[complex, np.ndarray]:
    """Split the tensor square of a spinor into its scalar and vector parts.

    Returns (scalar block, vector block) of C (s x s).  The scalar block is
    always zero (the singlet is antisymmetric); the complex 3-vector
    transforms by the rotation matrix of the group element, and is
    insensitive to the sign of s.
    """
    s = np.asarray(s, dtype=complex).reshape(2)
    table = clebsch_gordan(0.5, 0.5)
    prod = np.kron(s, s)
    scalar = complex((table.block(0.0) @ prod)[0])
    vector = table.block(1.0) @ prod
    return scalar, vector
