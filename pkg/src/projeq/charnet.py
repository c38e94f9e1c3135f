"""Character-indexed projectively equivariant networks (dense verification form).

A layer carries one intermediate feature per character of the group.  The
first layer sends the input through one twisted-equivariant map per
character; deeper layers combine slots by the convolution rule over the
character group: the output in slot eps sums the maps of type gamma
applied to the features of type delta over all pairs with gamma delta =
eps.  A learned selector finally mixes the slots into a single output.

These dense networks exist to make the equivariance statements checkable
at full precision; the trainable architectures live in
:mod:`projeq.vierernet` and :mod:`projeq.spinornet`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from projeq.groups import Character, char_product_table, character_group
from projeq.invariants import equivariant_basis
from projeq.linalg import COMPLEX
from projeq.reps import LinearRep, RepError


@dataclass(frozen=True, eq=False)
class CharIndexedFeature:
    """A tuple of same-shaped feature vectors, one per character."""

    chars: tuple[Character, ...]
    tensors: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.chars) != len(self.tensors):
            raise ValueError("one tensor per character required")
        shapes = {t.shape for t in self.tensors}
        if len(shapes) > 1:
            raise ValueError(f"feature tensors must share a shape, got {shapes}")
        keys = {c.key() for c in self.chars}
        if len(keys) != len(self.chars):
            raise ValueError("duplicate characters in feature tuple")

    def __len__(self):
        return len(self.chars)

    def slot(self, char: Character) -> np.ndarray:
        for c, t in zip(self.chars, self.tensors):
            if c.same_as(char):
                return t
        raise KeyError("character not present in feature tuple")


def modulus_tanh(z: np.ndarray) -> np.ndarray:
    """tanh(|z|) z / |z|: commutes with unit-modulus scalars and permutations."""
    r = np.abs(z)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, np.tanh(r) / safe, 1.0) * z


NONLINEARITIES = {
    "tanh": np.tanh,
    "modulus_tanh": modulus_tanh,
    "identity": lambda z: z,
}


@dataclass(frozen=True, eq=False)
class ProjEquivLinearLayer:
    """One twisted-equivariant map per character, stored as basis coefficients."""

    rep_in: LinearRep
    rep_out: LinearRep
    chars: tuple[Character, ...]
    bases: tuple[tuple[np.ndarray, ...], ...]  # per char: basis matrices
    coefficients: tuple[np.ndarray, ...]  # per char: vector of length len(basis)

    @classmethod
    def random(cls, rep_in: LinearRep, rep_out: LinearRep, rng: np.random.Generator) -> "ProjEquivLinearLayer":
        chars = tuple(character_group(rep_in.group, rep_in.field))
        bases = tuple(tuple(equivariant_basis(rep_in, rep_out, c)) for c in chars)
        coeffs = []
        for basis in bases:
            c = rng.normal(size=len(basis))
            if rep_in.field == COMPLEX:
                c = c + 1j * rng.normal(size=len(basis))
            coeffs.append(c)
        return cls(rep_in, rep_out, chars, bases, tuple(coeffs))

    def map_for(self, idx: int) -> np.ndarray:
        basis = self.bases[idx]
        if not basis:
            return np.zeros((self.rep_out.dim, self.rep_in.dim), dtype=self.rep_in.matrices.dtype)
        return np.tensordot(self.coefficients[idx], np.stack(basis), axes=1)

    def maps(self) -> list[np.ndarray]:
        return [self.map_for(i) for i in range(len(self.chars))]


def first_layer(x: np.ndarray, layer: ProjEquivLinearLayer, nonlinearity: str = "modulus_tanh") -> CharIndexedFeature:
    """v^eps = sigma(A^eps x), one slot per character."""
    sigma = NONLINEARITIES[nonlinearity]
    x = np.asarray(x)
    if x.shape[-1] != layer.rep_in.dim:
        raise RepError(f"input dimension {x.shape} does not match rep dim {layer.rep_in.dim}")
    tensors = tuple(sigma(a @ x) for a in layer.maps())
    return CharIndexedFeature(layer.chars, tensors)


def char_conv_layer(
    f: CharIndexedFeature, layer: ProjEquivLinearLayer, nonlinearity: str = "modulus_tanh"
) -> CharIndexedFeature:
    """Slot eps collects A^gamma v^delta over all pairs with gamma delta = eps."""
    if len(f.chars) != len(layer.chars) or not all(a.same_as(b) for a, b in zip(f.chars, layer.chars)):
        raise ValueError("feature and layer character tuples differ")
    sigma = NONLINEARITIES[nonlinearity]
    table = char_product_table(list(layer.chars))
    maps = layer.maps()
    out = [np.zeros((layer.rep_out.dim,) + f.tensors[0].shape[1:], dtype=maps[0].dtype) for _ in layer.chars]
    for gi, a in enumerate(maps):
        for di, v in enumerate(f.tensors):
            out[table[gi, di]] = out[table[gi, di]] + a @ v
    return CharIndexedFeature(layer.chars, tuple(sigma(t) for t in out))


def select(f: CharIndexedFeature, selector: np.ndarray) -> np.ndarray:
    """Weighted sum of the slots: selector has one scalar per character."""
    selector = np.asarray(selector)
    if selector.shape != (len(f.chars),):
        raise ValueError(f"selector length {selector.shape} != slot count {len(f.chars)}")
    out = np.zeros_like(f.tensors[0], dtype=np.result_type(f.tensors[0], selector))
    for p, t in zip(selector, f.tensors):
        out = out + p * t
    return out


@dataclass(frozen=True, eq=False)
class CharNet:
    """first layer + a stack of character convolutions (+ optional selector)."""

    layers: tuple[ProjEquivLinearLayer, ...]
    nonlinearity: str = "modulus_tanh"
    selector: np.ndarray | None = None

    @classmethod
    def random(cls, reps: list[LinearRep], rng: np.random.Generator, nonlinearity: str = "modulus_tanh", with_selector: bool = False):
        layers = tuple(ProjEquivLinearLayer.random(reps[i], reps[i + 1], rng) for i in range(len(reps) - 1))
        selector = None
        if with_selector:
            n = len(layers[0].chars)
            selector = rng.normal(size=n) + (1j * rng.normal(size=n) if reps[0].field == COMPLEX else 0.0)
        return cls(layers, nonlinearity, selector)

    def features(self, x: np.ndarray) -> list[CharIndexedFeature]:
        feats = [first_layer(x, self.layers[0], self.nonlinearity)]
        for layer in self.layers[1:]:
            feats.append(char_conv_layer(feats[-1], layer, self.nonlinearity))
        return feats

    def __call__(self, x: np.ndarray) -> np.ndarray:
        final = self.features(x)[-1]
        if self.selector is None:
            raise ValueError("network has no selector; use .features()")
        return select(final, self.selector)


def slot_equivariance_defect(net: CharNet, x: np.ndarray, g: int) -> float:
    """Largest deviation from v^eps(rho_0(g) x) = eps(g) rho_k(g) v^eps(x)."""
    rep_in = net.layers[0].rep_in
    transformed = net.features(rep_in.matrix(g) @ x)
    plain = net.features(x)
    worst = 0.0
    for k, layer in enumerate(net.layers):
        rep_out = layer.rep_out
        for c, t_trans, t_plain in zip(transformed[k].chars, transformed[k].tensors, plain[k].tensors):
            expected = c(g) * (rep_out.matrix(g) @ t_plain)
            worst = max(worst, float(np.max(np.abs(t_trans - expected))))
    return worst


@dataclass
class EquivarianceRecord:
    element: int
    sample: int
    sin_angle: float
    scalar: complex
    matched_char: int | None


@dataclass
class EquivarianceReport:
    passed: bool
    max_sin: float
    records: list[EquivarianceRecord] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": bool(self.passed),
            "max_sin": float(self.max_sin),
            "records": [
                {
                    "element": r.element,
                    "sample": r.sample,
                    "sin_angle": float(r.sin_angle),
                    "scalar": [float(np.real(r.scalar)), float(np.imag(r.scalar))],
                    "matched_char": r.matched_char,
                }
                for r in self.records
            ],
        }


def check_projective_equivariance(
    fn,
    rep_in: LinearRep,
    action_out,
    samples: int = 10,
    tol: float = 1e-8,
    seed: int = 0,
    chars: list[Character] | None = None,
) -> EquivarianceReport:
    """Test outputs for equality in projective space.

    For each random input x and group element g the outputs fn(rho_0(g) x)
    and action_out(g, fn(x)) must be parallel; the recovered proportionality
    scalar is reported and, when characters are supplied, matched against
    their values at g.
    """
    rng = np.random.default_rng(seed)
    records = []
    worst = 0.0
    for s in range(samples):
        x = rng.normal(size=rep_in.dim)
        if rep_in.field == COMPLEX:
            x = x + 1j * rng.normal(size=rep_in.dim)
        base = fn(x)
        for g in range(rep_in.group.order):
            lhs = action_out(g, base)
            rhs = fn(rep_in.matrix(g) @ x)
            nl = np.linalg.norm(lhs)
            if nl == 0.0:
                continue
            resid = rhs - lhs * (np.vdot(lhs, rhs) / nl**2)
            nr = np.linalg.norm(rhs)
            sin = float(np.linalg.norm(resid) / nr) if nr > 0 else 0.0
            lam = complex(np.vdot(lhs, rhs) / nl**2)
            matched = None
            if chars is not None:
                dists = [abs(lam - c(g)) for c in chars]
                best = int(np.argmin(dists))
                if dists[best] < 1e-6:
                    matched = best
            records.append(EquivarianceRecord(g, s, sin, lam, matched))
            worst = max(worst, sin)
    return EquivarianceReport(worst < tol, worst, records)
