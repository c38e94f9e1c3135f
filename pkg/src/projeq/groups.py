"""Finite groups as explicit Cayley tables, plus their character groups.

Groups are stored fully materialized: an n x n multiplication table over
element indices, an inverse table, a generator list and display labels.
Construction validates the table exhaustively (Latin square property,
identity, inverses, and -- for orders up to EXHAUSTIVE_ORDER -- the full
O(n^3) associativity scan).  Groups are capped at order 720; every case
needed here fits comfortably.

Characters are scalar-valued homomorphisms into the unit circle of the
field.  They are enumerated by brute force over root-of-unity assignments
to the generators, extended multiplicatively and validated against the
whole table; at these group sizes that is both simple and exhaustively
checkable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from projeq.linalg import COMPLEX, REAL, FieldMismatchError

MAX_ORDER = 720
EXHAUSTIVE_ORDER = 64  # full associativity scan only below this

_ROUND = 12  # decimals used when comparing / sorting character values


class GroupError(ValueError):
    """Raised for invalid group constructions or mismatched operands."""


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its Cayley table over element indices."""

    cayley: np.ndarray  # (n, n) int array, cayley[a, b] = index of a*b
    identity: int
    inverse: np.ndarray  # (n,) int array
    generators: tuple[int, ...]
    element_labels: tuple[str, ...]
    name: str = "group"

    def __post_init__(self):
        object.__setattr__(self, "cayley", np.asarray(self.cayley, dtype=np.int64))
        object.__setattr__(self, "inverse", np.asarray(self.inverse, dtype=np.int64))
        _validate_group(self)

    @property
    def order(self) -> int:
        return self.cayley.shape[0]

    def mul(self, a: int, b: int) -> int:
        return int(self.cayley[a, b])

    def inv(self, a: int) -> int:
        return int(self.inverse[a])

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def conjugate(self, h: int, g: int) -> int:
        """h g h^-1."""
        return self.mul(self.mul(h, g), self.inv(h))

    def __repr__(self):
        return f"FiniteGroup({self.name}, order={self.order})"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "order": self.order,
            "element_labels": list(self.element_labels),
            "identity": self.identity,
            "generators": list(self.generators),
            "cayley": self.cayley.tolist(),
        }


def same_group(a: FiniteGroup, b: FiniteGroup) -> bool:
    """Structural equality: same Cayley table and identity (labels ignored)."""
    if a is b:
        return True
    return (
        a.identity == b.identity
        and a.cayley.shape == b.cayley.shape
        and np.array_equal(a.cayley, b.cayley)
    )


def _validate_group(g: FiniteGroup) -> None:
    n = g.cayley.shape[0]
    if n == 0 or n > MAX_ORDER:
        raise GroupError(f"group order {n} outside supported range 1..{MAX_ORDER}")
    if g.cayley.shape != (n, n):
        raise GroupError("cayley table must be square")
    if len(g.element_labels) != n or len(g.inverse) != n:
        raise GroupError("label/inverse tables must match the group order")
    ref = np.arange(n)
    if not (np.all(np.sort(g.cayley, axis=1) == ref) and np.all(np.sort(g.cayley, axis=0) == ref[:, None])):
        raise GroupError("cayley table is not a Latin square")
    e = g.identity
    if not (np.all(g.cayley[e] == ref) and np.all(g.cayley[:, e] == ref)):
        raise GroupError("identity element does not act as identity")
    if not np.all(g.cayley[ref, g.inverse] == e):
        raise GroupError("inverse table is inconsistent")
    if n <= EXHAUSTIVE_ORDER:
        left = g.cayley[g.cayley]  # (a, b, c) -> (a*b)*c
        right = g.cayley[:, g.cayley.reshape(-1)].reshape(n, n, n)  # a*(b*c)
        if not np.array_equal(left, right):
            raise GroupError("multiplication table is not associative")
    closure = {e}
    frontier = [e]
    while frontier:
        x = frontier.pop()
        for gen in g.generators:
            y = int(g.cayley[x, gen])
            if y not in closure:
                closure.add(y)
                frontier.append(y)
    if len(closure) != n:
        raise GroupError("declared generators do not generate the group")


@dataclass(frozen=True, eq=False)
class Character:
    """A homomorphism from a finite group into the unit circle of R or C."""

    group: FiniteGroup
    values: np.ndarray  # (n,) float64 or complex128, unit modulus
    field: str

    def __post_init__(self):
        dtype = np.complex128 if self.field == COMPLEX else np.float64
        vals = np.asarray(self.values, dtype=dtype)
        object.__setattr__(self, "values", vals)
        n = self.group.order
        if vals.shape != (n,):
            raise GroupError("character value table has the wrong length")
        if abs(vals[self.group.identity] - 1.0) > 1e-12:
            raise GroupError("character must map the identity to 1")
        if np.max(np.abs(np.abs(vals) - 1.0)) > 1e-12:
            raise GroupError("character values must lie on the unit circle")
        outer = vals[:, None] * vals[None, :]
        if np.max(np.abs(vals[self.group.cayley] - outer)) > 1e-9:
            raise GroupError("value table is not multiplicative")

    def __call__(self, g: int):
        return self.values[g]

    @property
    def is_trivial(self) -> bool:
        return bool(np.max(np.abs(self.values - 1.0)) < 1e-12)

    def inverse_char(self) -> "Character":
        return Character(self.group, np.conj(self.values), self.field)

    def key(self) -> tuple:
        """Hashable rounded value table; used for dedup, ordering and lookup."""
        return tuple(
            (round(float(np.real(v)), _ROUND), round(float(np.imag(v)), _ROUND)) for v in self.values
        )

    def same_as(self, other: "Character") -> bool:
        return same_group(self.group, other.group) and self.key() == other.key()

    def __repr__(self):
        shown = ", ".join(f"{v:.3g}" for v in self.values[:6])
        return f"Character({self.group.name}: [{shown}{'...' if self.group.order > 6 else ''}])"

    def to_json(self) -> dict:
        return {
            "field": self.field,
            "values": [[float(np.real(v)), float(np.imag(v))] for v in self.values],
        }


@dataclass(frozen=True, eq=False)
class Subgroup:
    """A subset of a parent group, verified closed under product and inverse."""

    parent: FiniteGroup
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(set(int(m) for m in self.members)))
        object.__setattr__(self, "members", members)
        mset = set(members)
        if self.parent.identity not in mset:
            raise GroupError("subgroup must contain the identity")
        for a in members:
            if self.parent.inv(a) not in mset:
                raise GroupError("subgroup not closed under inversion")
            for b in members:
                if self.parent.mul(a, b) not in mset:
                    raise GroupError("subgroup not closed under products")

    @property
    def order(self) -> int:
        return len(self.members)

    def as_group(self, name: str | None = None) -> FiniteGroup:
        """Reindex the member set as a standalone FiniteGroup."""
        index = {m: i for i, m in enumerate(self.members)}
        n = len(self.members)
        cayley = np.empty((n, n), dtype=np.int64)
        for i, a in enumerate(self.members):
            for j, b in enumerate(self.members):
                cayley[i, j] = index[self.parent.mul(a, b)]
        inverse = np.array([index[self.parent.inv(a)] for a in self.members])
        labels = tuple(self.parent.element_labels[m] for m in self.members)
        generators = _find_generators(cayley, index[self.parent.identity])
        return FiniteGroup(
            cayley=cayley,
            identity=index[self.parent.identity],
            inverse=inverse,
            generators=generators,
            element_labels=labels,
            name=name or f"{self.parent.name}-sub{n}",
        )


def _find_generators(cayley: np.ndarray, identity: int) -> tuple[int, ...]:
    """Greedy generator search: add elements until closure covers the group."""
    n = cayley.shape[0]
    generators: list[int] = []
    closure = {identity}
    for cand in range(n):
        if cand in closure:
            continue
        generators.append(cand)
        frontier = list(closure | {cand})
        closure.add(cand)
        while frontier:
            x = frontier.pop()
            for gen in generators:
                y = int(cayley[x, gen])
                if y not in closure:
                    closure.add(y)
                    frontier.append(y)
        if len(closure) == n:
            break
    return tuple(generators)


def make_cyclic(n: int) -> FiniteGroup:
    """Z_n with addition mod n; generator {1} (empty for the trivial group)."""
    if n < 1:
        raise GroupError("cyclic group needs n >= 1")
    if n > MAX_ORDER:
        raise GroupError(f"order {n} exceeds the supported cap {MAX_ORDER}")
    idx = np.arange(n)
    cayley = (idx[:, None] + idx[None, :]) % n
    return FiniteGroup(
        cayley=cayley,
        identity=0,
        inverse=(-idx) % n,
        generators=(1,) if n > 1 else (),
        element_labels=tuple(str(k) for k in range(n)),
        name=f"Z{n}",
    )


VIERER_ELEMENTS = ((0, 0), (1, 0), (0, 1), (1, 1))


def make_vierer() -> FiniteGroup:
    """Klein's four-group Z_2 x Z_2.

    Element order is (0,0), (1,0), (0,1), (1,1); the first component is the
    vertical flip, the second the horizontal one.
    """
    index = {el: i for i, el in enumerate(VIERER_ELEMENTS)}
    n = 4
    cayley = np.empty((n, n), dtype=np.int64)
    for i, a in enumerate(VIERER_ELEMENTS):
        for j, b in enumerate(VIERER_ELEMENTS):
            cayley[i, j] = index[((a[0] + b[0]) % 2, (a[1] + b[1]) % 2)]
    return FiniteGroup(
        cayley=cayley,
        identity=0,
        inverse=np.arange(n),  # every element is an involution
        generators=(1, 2),
        element_labels=tuple(str(el) for el in VIERER_ELEMENTS),
        name="Z2xZ2",
    )


def make_symmetric(n: int) -> FiniteGroup:
    """S_n in lexicographic one-line order, composition (s o t)(i) = s(t(i)).

    Capped at n = 6 (order 720).
    """
    if n < 1:
        raise GroupError("symmetric group needs n >= 1")
    if n > 6:
        raise GroupError("make_symmetric supports n <= 6")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    count = perms.shape[0]
    powers = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
    keys = perms @ powers  # ascending, since perms are lexicographically sorted
    composed = perms[:, perms]  # composed[a, b, i] = perms[a, perms[b, i]] = (a o b)(i)
    cayley = np.searchsorted(keys, composed.reshape(count, count, n) @ powers)
    inv_perms = np.argsort(perms, axis=1)
    inverse = np.searchsorted(keys, inv_perms @ powers)
    adjacent = []
    for k in range(n - 1):
        t = list(range(n))
        t[k], t[k + 1] = t[k + 1], t[k]
        adjacent.append(int(np.searchsorted(keys, np.array(t) @ powers)))
    return FiniteGroup(
        cayley=cayley,
        identity=0,
        inverse=inverse,
        generators=tuple(adjacent),
        element_labels=tuple("".join(str(v) for v in p) for p in perms),
        name=f"S{n}",
    )


def permutation_of(group: FiniteGroup, g: int) -> tuple[int, ...]:
    """Recover the one-line tuple of an S_n element from its label."""
    return tuple(int(c) for c in group.element_labels[g])


def commutator_subgroup(g: FiniteGroup) -> Subgroup:
    """Closure of {h k h^-1 k^-1 : h, k in G} under products."""
    n = g.order
    idx = np.arange(n)
    hk = g.cayley
    inv_prod = g.cayley[g.inverse[:, None], g.inverse[None, :]]  # h^-1 k^-1
    commutators = set(g.cayley[hk, inv_prod].reshape(-1).tolist())
    members = set(commutators) | {g.identity}
    frontier = list(members)
    while frontier:
        x = frontier.pop()
        for c in commutators:
            y = int(g.cayley[x, c])
            if y not in members:
                members.add(y)
                frontier.append(y)
    del idx
    return Subgroup(parent=g, members=tuple(sorted(members)))


def is_perfect(g: FiniteGroup) -> bool:
    return commutator_subgroup(g).order == g.order


def _snap_root(z: complex, tol: float = 1e-12) -> complex:
    """Round root-of-unity components that are within ``tol`` of an integer.

    Keeps the 2nd/4th roots exact so products over the Cayley table stay
    exact (e.g. the printed +-1 tables).
    """
    re, im = np.real(z), np.imag(z)
    if abs(re - round(re)) < tol:
        re = float(round(re))
    if abs(im - round(im)) < tol:
        im = float(round(im))
    return complex(re, im)


def _extend_from_generators(g: FiniteGroup, gen_values: dict[int, complex]) -> np.ndarray | None:
    """Multiplicatively extend generator values to the whole group via BFS."""
    vals = np.full(g.order, np.nan + 0j, dtype=np.complex128)
    vals[g.identity] = 1.0
    frontier = [g.identity]
    while frontier:
        x = frontier.pop()
        for gen, gv in gen_values.items():
            y = g.mul(x, gen)
            if np.isnan(vals[y].real):
                vals[y] = vals[x] * gv
                frontier.append(y)
    if np.any(np.isnan(vals.real)):
        return None
    return vals


def character_group(g: FiniteGroup, fieldtag: str = COMPLEX) -> list[Character]:
    """All homomorphisms from ``g`` into the unit circle of the field.

    Enumerates d-th roots of unity on each generator (d = generator order;
    over R only +-1 qualify), extends by products and keeps exactly the
    assignments that are multiplicative on the full Cayley table.  The
    trivial character comes first; the rest are ordered by their value
    tables, which reproduces the usual printed tables (e.g. the four rows
    ++, +-, -+, -- for the Vierergroup).
    """
    if fieldtag not in (REAL, COMPLEX):
        raise GroupError(f"unknown field tag {fieldtag!r}")
    gens = list(g.generators) if g.generators else []
    candidate_roots = []
    for gen in gens:
        d = g.element_order(gen)
        if fieldtag == COMPLEX:
            roots = [_snap_root(np.exp(2j * np.pi * m / d)) for m in range(d)]
        else:
            roots = [1.0 + 0j] + ([-1.0 + 0j] if d % 2 == 0 else [])
        candidate_roots.append(roots)

    found: dict[tuple, np.ndarray] = {}
    for assignment in itertools.product(*candidate_roots) if gens else [()]:
        vals = _extend_from_generators(g, dict(zip(gens, assignment)))
        if vals is None:
            continue
        outer = vals[:, None] * vals[None, :]
        if np.max(np.abs(vals[g.cayley] - outer)) > 1e-9:
            continue
        if fieldtag == REAL:
            vals = np.real(vals)
        ch = Character(g, vals, fieldtag)
        found.setdefault(ch.key(), ch)

    def sort_key(ch: Character):
        return tuple((-re, -im) for re, im in ch.key())

    return sorted(found.values(), key=sort_key)


def char_mul(a: Character, b: Character) -> Character:
    if not same_group(a.group, b.group):
        raise GroupError("characters live on different groups")
    if a.field != b.field:
        raise FieldMismatchError(f"character field mismatch: {a.field} vs {b.field}")
    return Character(a.group, a.values * b.values, a.field)


def trivial_character(g: FiniteGroup, fieldtag: str = COMPLEX) -> Character:
    return Character(g, np.ones(g.order), fieldtag)


def char_product_table(chars: list[Character]) -> np.ndarray:
    """Index table of pointwise products: table[i, j] = k with c_i c_j = c_k."""
    lookup = {c.key(): i for i, c in enumerate(chars)}
    table = np.empty((len(chars), len(chars)), dtype=np.int64)
    for i, a in enumerate(chars):
        for j, b in enumerate(chars):
            k = lookup.get(char_mul(a, b).key())
            if k is None:
                raise GroupError("character list is not closed under products")
            table[i, j] = k
    return table
