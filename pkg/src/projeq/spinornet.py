"""Point-cloud networks over scalars, spinors and vectors.

A layer maps per-point typed features f_j through pairwise filters
psi(x_j - x_i) (and optionally the raw input spinors s_j) and sums over
j != i.  For each requested output unit and each admissible (input type,
filter type) pair, the layer forms a learned weighted sum of the inputs
of that type and a learned weighted sum of the filter atoms, tensors the
two and contracts with the matching coupling rows:

    scalars come from scalar*scalar, the spinor singlet, and vector dot
    products; vectors from scalar*vector mixes, vector cross products and
    the spinor-pair vector block; spinors from scalar*spinor mixes and
    the spinor block of vector-spinor products.

Complex-valued scalar and vector outputs (anything produced from spinor
pairs) are split into real and imaginary halves, so two requested real
outputs share one complex computation.  No radial functions are used.
Scalar outputs carry biases (they transform trivially); everything else
is bias-free.  Between layers, scalar features pass through GeLU while
each non-scalar feature is scaled by the sigmoid of its own learned gate
scalar, produced by the same layer.

The five architecture variants differ only in their level counts and in
whether spinors enter as features, as filters, or pre-squared into
(complex) vectors; the exact per-layer counts live in VARIANTS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from projeq import autodiff as ad
from projeq import su2

VARIANT_NAMES = (
    "spinors-as-scalars",
    "spinors-as-features",
    "spinors-as-filters",
    "squared-features",
    "squared-filters",
)


@dataclass(frozen=True)
class TypeCounts:
    scalars: int
    spinors: int
    vectors: int

    def as_tuple(self):
        return (self.scalars, self.spinors, self.vectors)


@dataclass(frozen=True)
class SpinorLayerSpec:
    inputs: TypeCounts
    filters: TypeCounts
    outputs: TypeCounts
    gated: bool


def _counts(s, sp, v):
    return TypeCounts(s, sp, v)


VARIANTS: dict[str, list[SpinorLayerSpec]] = {
    "spinors-as-scalars": [
        SpinorLayerSpec(_counts(4, 0, 1), _counts(1, 0, 1), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(1, 0, 1), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(1, 0, 1), _counts(4, 0, 0), False),
    ],
    "spinors-as-features": [
        SpinorLayerSpec(_counts(0, 1, 1), _counts(1, 0, 1), _counts(32, 12, 12), True),
        SpinorLayerSpec(_counts(32, 12, 12), _counts(1, 0, 1), _counts(0, 12, 0), True),
        SpinorLayerSpec(_counts(0, 12, 0), _counts(1, 0, 1), _counts(0, 1, 0), False),
    ],
    "spinors-as-filters": [
        SpinorLayerSpec(_counts(0, 0, 1), _counts(1, 1, 1), _counts(32, 4, 4), True),
        SpinorLayerSpec(_counts(32, 4, 4), _counts(1, 1, 1), _counts(32, 4, 4), True),
        SpinorLayerSpec(_counts(32, 4, 4), _counts(1, 1, 1), _counts(0, 1, 0), False),
    ],
    "squared-features": [
        SpinorLayerSpec(_counts(0, 0, 3), _counts(1, 0, 1), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(1, 0, 1), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(0, 1, 0), _counts(0, 1, 0), False),
    ],
    "squared-filters": [
        SpinorLayerSpec(_counts(0, 0, 1), _counts(1, 0, 3), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(1, 0, 3), _counts(32, 0, 8), True),
        SpinorLayerSpec(_counts(32, 0, 8), _counts(0, 1, 0), _counts(0, 1, 0), False),
    ],
}


def _coupling_tables():
    """Constant contraction tensors, all sourced from the Clebsch-Gordan tables."""
    t11 = su2.clebsch_gordan(1, 1)
    thh = su2.clebsch_gordan(0.5, 0.5)
    tvs = su2.clebsch_gordan(1, 0.5)
    tsv = su2.clebsch_gordan(0.5, 1)
    return {
        "dot": (t11.block(0.0) * np.sqrt(3.0)).real.reshape(3, 3),  # literal dot product
        "cross": (t11.block(1.0) * np.sqrt(2.0)).real.reshape(3, 3, 3),  # literal cross product
        "singlet": thh.block(0.0).reshape(2, 2),
        "pair_vector": thh.block(1.0).reshape(3, 2, 2),
        "vec_spin": tvs.block(0.5).reshape(2, 3, 2),
        "spin_vec": tsv.block(0.5).reshape(2, 2, 3),
    }


def _pair_contract(table: np.ndarray, f: ad.Var, psi: ad.Var) -> ad.Var:
    """out[b,i,j,u,r] = sum_cd table[r,c,d] f[b,i,j,u,c] psi[b,i,j,u,d]."""
    fc = ad.reshape(f, f.shape[:-1] + (f.shape[-1], 1))
    pc = ad.reshape(psi, psi.shape[:-1] + (1, psi.shape[-1]))
    outer = ad.mul(fc, pc)  # (b, i, j, u, c, d) after broadcasting
    return ad.ein("bijucd,rcd->bijur", outer, table)


def _dot_contract(f: ad.Var, psi: ad.Var) -> ad.Var:
    return ad.sum_axis(ad.mul(f, psi), axis=-1)


class SpinorNet:
    """One of the five variants, assembled from VARIANTS layer specs."""

    def __init__(self, variant: str, seed: int = 0):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; choose from {VARIANT_NAMES}")
        self.variant = variant
        self.specs = VARIANTS[variant]
        self.tables = _coupling_tables()
        self.params_dict: dict[str, ad.Var] = {}
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
        for k, spec in enumerate(self.specs):
            self._init_layer(k, spec, rng)

    # -- parameters ---------------------------------------------------------

    def _add_param(self, name: str, shape: tuple, rng, std: float) -> None:
        self.params_dict[name] = ad.Var(rng.normal(scale=std, size=shape))

    def _init_pair(self, prefix: str, n_out: int, n_in: int, n_filt: int, rng) -> None:
        if n_out == 0 or n_in == 0 or n_filt == 0:
            return
        self._add_param(f"{prefix}.w", (n_out, n_in), rng, 1.0 / np.sqrt(n_in))
        self._add_param(f"{prefix}.u", (n_out, n_filt), rng, 1.0 / np.sqrt(n_filt))

    def _init_layer(self, k: int, spec: SpinorLayerSpec, rng) -> None:
        ns, nsp, nv = spec.inputs.as_tuple()
        fs, fsp, fv = spec.filters.as_tuple()
        n_gates = (spec.outputs.spinors + spec.outputs.vectors) if spec.gated else 0
        n_s_out = spec.outputs.scalars + n_gates
        n_pairs = (n_s_out + 1) // 2
        p = f"layer{k}"
        # scalar outputs; biases only on hidden (gated) layers so that an
        # isolated point still maps to exactly zero output
        self._init_pair(f"{p}.ss", n_s_out, ns, fs, rng)
        self._init_pair(f"{p}.vv_dot", n_s_out, nv, fv, rng)
        self._init_pair(f"{p}.spsp_singlet", n_pairs, nsp, fsp, rng)
        if n_s_out and spec.gated:
            self._add_param(f"{p}.s_bias", (n_s_out,), rng, 0.01)
        # spinor outputs
        nspo = spec.outputs.spinors
        self._init_pair(f"{p}.s_sp", nspo, ns, fsp, rng)
        self._init_pair(f"{p}.sp_s", nspo, nsp, fs, rng)
        self._init_pair(f"{p}.v_sp", nspo, nv, fsp, rng)
        self._init_pair(f"{p}.sp_v", nspo, nsp, fv, rng)
        # vector outputs
        nvo = spec.outputs.vectors
        n_vpairs = (nvo + 1) // 2
        self._init_pair(f"{p}.s_v", nvo, ns, fv, rng)
        self._init_pair(f"{p}.v_s", nvo, nv, fs, rng)
        self._init_pair(f"{p}.vv_cross", nvo, nv, fv, rng)
        self._init_pair(f"{p}.spsp_vec", n_vpairs, nsp, fsp, rng)

    def params(self) -> dict[str, ad.Var]:
        return self.params_dict

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {name: var.value for name, var in self.params_dict.items()}

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        for name, var in self.params_dict.items():
            var.value = np.array(tensors[name])

    def parameter_count(self) -> int:
        return sum(v.value.size for v in self.params_dict.values())

    # -- data preparation (outside the tape) --------------------------------

    def build_inputs(self, positions: np.ndarray, spinors: np.ndarray) -> dict:
        """Initial typed features per variant; all translation invariant."""
        b, m, _ = positions.shape
        rel = positions[:, :, None, :] - positions[:, None, :, :]  # x_i - x_j at (i, j)
        mean_rel = rel.sum(axis=2) / max(m - 1, 1)  # mean over j != i (diagonal is zero)
        feats: dict[str, np.ndarray | None] = {"s": None, "sp": None, "v": None}
        if self.variant == "spinors-as-scalars":
            feats["s"] = np.stack(
                [spinors[..., 0].real, spinors[..., 0].imag, spinors[..., 1].real, spinors[..., 1].imag], axis=-1
            )
            feats["v"] = mean_rel[:, :, None, :]
        elif self.variant == "spinors-as-features":
            feats["sp"] = spinors[:, :, None, :]
            feats["v"] = mean_rel[:, :, None, :]
        elif self.variant in ("spinors-as-filters", "squared-filters"):
            feats["v"] = mean_rel[:, :, None, :]
        elif self.variant == "squared-features":
            squares = _square_vectors(spinors)  # (b, m, 3) complex
            feats["v"] = np.stack([mean_rel, squares.real, squares.imag], axis=2)
        return feats

    def build_filters(self, positions: np.ndarray, spinors: np.ndarray) -> list[dict]:
        """Per-layer filter atoms evaluated at each ordered pair (i, j)."""
        b, m, _ = positions.shape
        diff = positions[:, None, :, :] - positions[:, :, None, :]  # x_j - x_i at (i, j)
        norms = np.linalg.norm(diff, axis=-1, keepdims=True)
        safe = np.where(norms > 0, norms, 1.0)
        unit = np.where(norms > 0, diff / safe, 0.0)  # diagonal stays zero
        ones = np.ones((b, m, m, 1))
        spin_j = np.broadcast_to(spinors[:, None, :, :], (b, m, m, 2)).copy()
        squares = _square_vectors(spinors)  # (b, m, 3)
        sq_j = np.broadcast_to(squares[:, None, :, :], (b, m, m, 3)).copy()
        out = []
        for spec in self.specs:
            fs, fsp, fv = spec.filters.as_tuple()
            filt: dict[str, np.ndarray | None] = {"s": None, "sp": None, "v": None}
            if fs == 1:
                filt["s"] = ones
            elif fs != 0:
                raise ValueError(f"unsupported scalar filter count {fs}")
            if fsp == 1:
                filt["sp"] = spin_j[:, :, :, None, :]
            elif fsp != 0:
                raise ValueError(f"unsupported spinor filter count {fsp}")
            if fv == 1:
                filt["v"] = unit[:, :, :, None, :]
            elif fv == 3:
                filt["v"] = np.stack([unit, sq_j.real, sq_j.imag], axis=3)
            elif fv != 0:
                raise ValueError(f"unsupported vector filter count {fv}")
            out.append(filt)
        return out

    # -- forward -------------------------------------------------------------

    def _weighted(self, name: str, values, spec: str):
        if name not in self.params_dict:
            return None
        return ad.ein(spec, self.params_dict[name], values)

    def _layer(self, k: int, spec: SpinorLayerSpec, feats: dict, filt: dict, mask: np.ndarray) -> dict:
        p = f"layer{k}"
        tables = self.tables
        n_gates = (spec.outputs.spinors + spec.outputs.vectors) if spec.gated else 0
        n_s_out = spec.outputs.scalars + n_gates

        def wf(name, f, with_component):
            # weighted features at j, broadcast over i: (b, 1, j, u[, d])
            spec_str = "ua,bjad->bjud" if with_component else "ua,bja->bju"
            out = self._weighted(name, f, spec_str)
            if out is None:
                return None
            shape = out.shape
            return ad.reshape(out, (shape[0], 1) + shape[1:])

        def wpsi(name, psi, with_component):
            spec_str = "ua,bijad->bijud" if with_component else "ua,bija->biju"
            return self._weighted(name, psi, spec_str)

        def reduce_j(contrib):
            # mask the diagonal and sum over the source point axis
            extra = contrib.value.ndim - 3
            m = mask.reshape(mask.shape + (1,) * extra)
            return ad.sum_axis(ad.mul(contrib, m), axis=2)

        contributions_s = []
        if n_s_out:
            f = wf(f"{p}.ss.w", feats["s"], False)
            u = wpsi(f"{p}.ss.u", filt["s"], False)
            if f is not None and u is not None:
                contributions_s.append(reduce_j(ad.mul(f, u)))
            f = wf(f"{p}.vv_dot.w", feats["v"], True)
            u = wpsi(f"{p}.vv_dot.u", filt["v"], True)
            if f is not None and u is not None:
                contributions_s.append(reduce_j(_dot_contract(f, u)))
            f = wf(f"{p}.spsp_singlet.w", feats["sp"], True)
            u = wpsi(f"{p}.spsp_singlet.u", filt["sp"], True)
            if f is not None and u is not None:
                z = reduce_j(_pair_contract(tables["singlet"].reshape(1, 2, 2), f, u))
                z = ad.reshape(z, z.shape[:-1])  # drop the singleton block axis
                contributions_s.append(_split_complex(z, n_s_out))

        contributions_sp = []
        if spec.outputs.spinors:
            f = wf(f"{p}.s_sp.w", feats["s"], False)
            u = wpsi(f"{p}.s_sp.u", filt["sp"], True)
            if f is not None and u is not None:
                contributions_sp.append(reduce_j(ad.mul(ad.reshape(f, f.shape + (1,)), u)))
            f = wf(f"{p}.sp_s.w", feats["sp"], True)
            u = wpsi(f"{p}.sp_s.u", filt["s"], False)
            if f is not None and u is not None:
                contributions_sp.append(reduce_j(ad.mul(f, ad.reshape(u, u.shape + (1,)))))
            f = wf(f"{p}.v_sp.w", feats["v"], True)
            u = wpsi(f"{p}.v_sp.u", filt["sp"], True)
            if f is not None and u is not None:
                contributions_sp.append(reduce_j(_pair_contract(tables["vec_spin"], f, u)))
            f = wf(f"{p}.sp_v.w", feats["sp"], True)
            u = wpsi(f"{p}.sp_v.u", filt["v"], True)
            if f is not None and u is not None:
                contributions_sp.append(reduce_j(_pair_contract(tables["spin_vec"], f, u)))

        contributions_v = []
        if spec.outputs.vectors:
            f = wf(f"{p}.s_v.w", feats["s"], False)
            u = wpsi(f"{p}.s_v.u", filt["v"], True)
            if f is not None and u is not None:
                contributions_v.append(reduce_j(ad.mul(ad.reshape(f, f.shape + (1,)), u)))
            f = wf(f"{p}.v_s.w", feats["v"], True)
            u = wpsi(f"{p}.v_s.u", filt["s"], False)
            if f is not None and u is not None:
                contributions_v.append(reduce_j(ad.mul(f, ad.reshape(u, u.shape + (1,)))))
            f = wf(f"{p}.vv_cross.w", feats["v"], True)
            u = wpsi(f"{p}.vv_cross.u", filt["v"], True)
            if f is not None and u is not None:
                contributions_v.append(reduce_j(_pair_contract(tables["cross"], f, u)))
            f = wf(f"{p}.spsp_vec.w", feats["sp"], True)
            u = wpsi(f"{p}.spsp_vec.u", filt["sp"], True)
            if f is not None and u is not None:
                z = reduce_j(_pair_contract(tables["pair_vector"], f, u))
                contributions_v.append(_split_complex_vectors(z, spec.outputs.vectors))

        out: dict[str, ad.Var | None] = {"s": None, "sp": None, "v": None}
        if contributions_s:
            total = contributions_s[0]
            for c in contributions_s[1:]:
                total = ad.add(total, c)
            bias = self.params_dict.get(f"{p}.s_bias")
            out["s"] = ad.add(total, bias) if bias is not None else total
        if contributions_sp:
            total = contributions_sp[0]
            for c in contributions_sp[1:]:
                total = ad.add(total, c)
            out["sp"] = total
        if contributions_v:
            total = contributions_v[0]
            for c in contributions_v[1:]:
                total = ad.add(total, c)
            out["v"] = total

        if spec.gated:
            out = gated_nonlinearity(out, spec.outputs)
        return out

    def typed_features(self, positions: np.ndarray, spinors: np.ndarray) -> list[dict]:
        """Per-layer output features (after gating), mostly for inspection."""
        b, m, _ = positions.shape
        mask = (1.0 - np.eye(m))[None, :, :]
        feats = self.build_inputs(positions, spinors)
        filters = self.build_filters(positions, spinors)
        feats = {k: (ad.Var(v) if v is not None else None) for k, v in feats.items()}
        collected = []
        for k, spec in enumerate(self.specs):
            feats = self._layer(k, spec, feats, filters[k], mask)
            collected.append(feats)
        return collected

    def forward(self, positions: np.ndarray, spinors: np.ndarray) -> ad.Var:
        """Predicted spinor per sample, shape (B, 2) complex."""
        final = self.typed_features(positions, spinors)[-1]
        if self.variant == "spinors-as-scalars":
            scal = ad.mean_axis(final["s"], axis=1)  # (B, 4)
            re = ad.narrow(scal, 1, 0, 1)
            im = ad.narrow(scal, 1, 1, 1)
            re2 = ad.narrow(scal, 1, 2, 1)
            im2 = ad.narrow(scal, 1, 3, 1)
            comp0 = ad.add(re, ad.scale(im, 1j))
            comp1 = ad.add(re2, ad.scale(im2, 1j))
            return ad.reshape(ad.concat([comp0, comp1], 1), (scal.shape[0], 2))
        spin = ad.mean_axis(final["sp"], axis=1)  # (B, 1, 2)
        return ad.reshape(spin, (spin.shape[0], 2))

    def loss(self, positions: np.ndarray, spinors: np.ndarray, targets: np.ndarray) -> ad.Var:
        return ad.spinor_sign_loss(self.forward(positions, spinors), targets)


def _square_vectors(spinors: np.ndarray) -> np.ndarray:
    """Vector block of the tensor square for a (..., 2) complex spinor array."""
    table = su2.clebsch_gordan(0.5, 0.5).block(1.0).reshape(3, 2, 2)
    return np.einsum("rcd,...c,...d->...r", table, spinors, spinors)


def _split_complex(z: ad.Var, n_out: int) -> ad.Var:
    """Interleave Re/Im of (..., n_pairs) complex scalars into n_out reals."""
    parts = []
    n_pairs = z.shape[-1]
    for t in range(n_pairs):
        zt = ad.narrow(z, z.value.ndim - 1, t, 1)
        parts.append(ad.real(zt))
        if 2 * t + 1 < n_out:
            parts.append(ad.imag(zt))
    return ad.concat(parts, len(z.shape) - 1)


def _split_complex_vectors(z: ad.Var, n_out: int) -> ad.Var:
    """Same splitting for (..., n_pairs, 3) complex vectors."""
    parts = []
    n_pairs = z.shape[-2]
    for t in range(n_pairs):
        zt = ad.narrow(z, z.value.ndim - 2, t, 1)
        parts.append(ad.real(zt))
        if 2 * t + 1 < n_out:
            parts.append(ad.imag(zt))
    return ad.concat(parts, z.value.ndim - 2)


def gated_nonlinearity(features: dict, counts: TypeCounts) -> dict:
    """GeLU on scalar features; sigmoid-gated scaling on spinors and vectors.

    The trailing gate scalars (one per non-scalar feature) are produced by
    the same layer and consumed here.
    """
    n_gates = counts.spinors + counts.vectors
    scal = features["s"]
    if scal is None:
        if n_gates:
            raise ValueError("gates required but the layer produced no scalars")
        return features
    total = scal.shape[-1]
    if total < counts.scalars + n_gates:
        raise ValueError("missing gate scalars for the non-scalar features")
    out: dict = {"s": None, "sp": None, "v": None}
    if counts.scalars:
        out["s"] = ad.gelu(ad.narrow(scal, scal.value.ndim - 1, 0, counts.scalars))
    offset = counts.scalars
    if counts.spinors:
        gates = ad.sigmoid(ad.narrow(scal, scal.value.ndim - 1, offset, counts.spinors))
        out["sp"] = ad.mul(features["sp"], ad.reshape(gates, gates.shape + (1,)))
        offset += counts.spinors
    if counts.vectors:
        gates = ad.sigmoid(ad.narrow(scal, scal.value.ndim - 1, offset, counts.vectors))
        out["v"] = ad.mul(features["v"], ad.reshape(gates, gates.shape + (1,)))
    return out
