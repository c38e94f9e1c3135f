"""Flip-projective CNN built from character-typed 3x3 filter bases.

Each layer keeps a 4-tuple of feature maps, one per character of the flip
group.  Per input-output channel pair the layer owns 9 raw parameters,
split into coefficient blocks of sizes (4, 2, 2, 1) against the fixed
typed filter bases; a kernel materialized from the type-eps block flips
into eps(g) times itself, which is what propagates the slot structure
through padded convolutions.  Layer outputs combine as a convolution over
the character group (slot eps sums type-gamma kernels applied to slot
delta whenever gamma delta = eps), realized as one big block-structured
convolution so the whole step is a single gemm.

After the last layer the maps are average-pooled, mixed by one selector
vector per class, batch-normalized and fed to softmax / cross-entropy.
All convolutions are bias-free: a bias would break the sign-twisted slots.

A parameter-matched plain CNN with the same widths (9 parameters per
channel pair either way) serves as the non-equivariant comparator.
"""

from __future__ import annotations

import numpy as np

from projeq import autodiff as ad
from projeq.groups import char_product_table, character_group
from projeq.invariants import invariant_basis
from projeq.linalg import REAL
from projeq.reps import rep_flip_image

CLASS_WEIGHTS = np.array([1, 1, 1, 1.5, 1.5, 1.5, 1.5, 1.5, 3, 3, 1], dtype=np.float64)
BN_EPS = 1e-5
BN_MOMENTUM = 0.1

_BASIS_CACHE: dict = {}


def typed_filter_bases() -> tuple[list[np.ndarray], list]:
    """Orthonormal 3x3 kernel bases per character of the flip group.

    Returns (bases, characters); basis k has shape (dim_k, 3, 3) with the
    dimensions (4, 2, 2, 1).  A type-eps basis kernel flipped vertically /
    horizontally equals eps((1,0)) / eps((0,1)) times itself.
    """
    if "bases" not in _BASIS_CACHE:
        rep = rep_flip_image(3, 3)
        chars = character_group(rep.group, REAL)
        bases = []
        for c in chars:
            vecs = invariant_basis(rep, c).vectors
            bases.append(np.stack([v.reshape(3, 3) for v in vecs]))
        _BASIS_CACHE["bases"] = bases
        _BASIS_CACHE["chars"] = chars
        _BASIS_CACHE["prodtab"] = char_product_table(list(chars))
    return _BASIS_CACHE["bases"], _BASIS_CACHE["chars"]


def _char_product_table() -> np.ndarray:
    typed_filter_bases()
    return _BASIS_CACHE["prodtab"]


class ViererConvLayer:
    """9 raw parameters per channel pair, split (4, 2, 2, 1) over the typed bases."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, fan_slots: int, dtype=np.float64):
        self.c_in = c_in
        self.c_out = c_out
        self.dtype = np.dtype(dtype)
        std = 1.0 / np.sqrt(9.0 * c_in * fan_slots)
        self.coeff = ad.Var(rng.normal(scale=std, size=(c_out, c_in, 9)).astype(self.dtype))
        self.block_slices = []
        offset = 0
        for basis in typed_filter_bases()[0]:
            self.block_slices.append((offset, basis.shape[0]))
            offset += basis.shape[0]

    def kernels(self) -> list[ad.Var]:
        """Materialize one (c_out, c_in, 3, 3) kernel stack per character."""
        bases, _ = typed_filter_bases()
        out = []
        for basis, (start, length) in zip(bases, self.block_slices):
            block = ad.narrow(self.coeff, 2, start, length)
            out.append(ad.ein("oip,pxy->oixy", block, basis.astype(self.dtype)))
        return out

    def stacked_first(self) -> ad.Var:
        """Kernel for the input layer: slot eps channels carry the type-eps kernel."""
        return ad.concat(self.kernels(), 0)

    def stacked_group(self) -> ad.Var:
        """Block kernel of the character-group convolution on 4-slot features.

        Output slot block eps, input slot block delta holds the kernel of
        type gamma = eps * delta^{-1} (characters are self-inverse here).
        """
        table = _char_product_table()
        kernels = self.kernels()
        rows = []
        for eps in range(len(kernels)):
            rows.append(ad.concat([kernels[table[eps, delta]] for delta in range(len(kernels))], 1))
        return ad.concat(rows, 0)


def mean_center(images: np.ndarray, dtype=np.float64) -> np.ndarray:
    """Per-image zero mean, the only input normalization used."""
    images = np.asarray(images, dtype=dtype)
    return images - images.mean(axis=(-2, -1), keepdims=True)


class BatchNorm:
    """Per-feature standardization with learned affine and running statistics."""

    def __init__(self, num_features: int, dtype=np.float64):
        self.gamma = ad.Var(np.ones(num_features, dtype=dtype))
        self.beta = ad.Var(np.zeros(num_features, dtype=dtype))
        self.running_mean = np.zeros(num_features, dtype=dtype)
        self.running_var = np.ones(num_features, dtype=dtype)

    def __call__(self, x: ad.Var, training: bool) -> ad.Var:
        if training:
            mu = ad.mean_axis(x, axis=0, keepdims=True)
            centered = ad.sub(x, mu)
            var = ad.mean_axis(ad.mul(centered, centered), axis=0, keepdims=True)
            self.running_mean = (1 - BN_MOMENTUM) * self.running_mean + BN_MOMENTUM * mu.value.reshape(-1)
            self.running_var = (1 - BN_MOMENTUM) * self.running_var + BN_MOMENTUM * var.value.reshape(-1)
            inv = pow_inv_sqrt(ad.add(var, BN_EPS * np.ones_like(var.value)))
            normalized = ad.mul(centered, inv)
        else:
            inv = (1.0 / np.sqrt(self.running_var + BN_EPS)).astype(x.value.dtype)
            normalized = ad.mul(ad.sub(x, self.running_mean[None, :].astype(x.value.dtype)), inv[None, :])
        return ad.add(ad.mul(normalized, self.gamma), self.beta)


def pow_inv_sqrt(x: ad.Var) -> ad.Var:
    return ad.pow_const(x, -0.5)


class ViererNet:
    """Four character-convolution layers, pooling, selectors, batch norm."""

    def __init__(self, widths=(4, 4, 4), classes: int = 11, seed: int = 0, dtype=np.float64):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        chans = [1, *widths, classes]
        self.widths = tuple(widths)
        self.classes = classes
        self.dtype = np.dtype(dtype)
        self.layers = []
        for k in range(len(chans) - 1):
            fan_slots = 1 if k == 0 else 4
            self.layers.append(ViererConvLayer(chans[k], chans[k + 1], rng, fan_slots, dtype=self.dtype))
        self.selector = ad.Var(rng.normal(scale=0.5, size=(classes, 4)).astype(self.dtype))
        self.bn = BatchNorm(classes, dtype=self.dtype)

    def params(self) -> dict[str, ad.Var]:
        out = {f"conv{k}.coeff": layer.coeff for k, layer in enumerate(self.layers)}
        out["selector"] = self.selector
        out["bn.gamma"] = self.bn.gamma
        out["bn.beta"] = self.bn.beta
        return out

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {name: var.value for name, var in self.params().items()}
        out["bn.running_mean"] = self.bn.running_mean
        out["bn.running_var"] = self.bn.running_var
        return out

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        for name, var in self.params().items():
            var.value = np.array(tensors[name])
        self.bn.running_mean = np.array(tensors["bn.running_mean"])
        self.bn.running_var = np.array(tensors["bn.running_var"])

    def parameter_count(self) -> int:
        return sum(v.value.size for v in self.params().values())

    def slot_features(self, images: np.ndarray) -> ad.Var:
        """Pre-pooling features, shape (B, 4, classes, H, W)."""
        x = mean_center(images, self.dtype)
        batch, height, width = x.shape
        h = ad.Var(x.reshape(batch, 1, height, width))
        h = ad.tanh(ad.conv3x3(h, self.layers[0].stacked_first()))
        for layer in self.layers[1:]:
            h = ad.tanh(ad.conv3x3(h, layer.stacked_group()))
        return ad.reshape(h, (batch, 4, self.classes, height, width))

    def selector_outputs(self, images: np.ndarray) -> ad.Var:
        """Per-class selector mixes of the pooled slots, before batch norm."""
        feats = self.slot_features(images)
        pooled = ad.mean_axis(ad.mean_axis(feats, axis=4), axis=3)  # (B, 4, classes)
        return ad.ein("bec,ce->bc", pooled, self.selector)

    def logits(self, images: np.ndarray, training: bool) -> ad.Var:
        return self.bn(self.selector_outputs(images), training)

    def predict(self, images: np.ndarray) -> np.ndarray:
        z = self.logits(images, training=False).value
        return np.argmax(z, axis=1)

    def loss(self, images: np.ndarray, labels: np.ndarray, training: bool = True) -> ad.Var:
        z = self.logits(images, training)
        weights = CLASS_WEIGHTS if self.classes == len(CLASS_WEIGHTS) else np.ones(self.classes)
        return ad.weighted_softmax_cross_entropy(z, labels, weights)


class BaselineCNN:
    """Plain CNN with the same widths: 9 parameters per channel pair, like above."""

    def __init__(self, widths=(4, 4, 4), classes: int = 11, seed: int = 0, dtype=np.float64):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        chans = [1, *widths, classes]
        self.classes = classes
        self.dtype = np.dtype(dtype)
        self.kernels = [
            ad.Var(rng.normal(scale=1.0 / np.sqrt(9.0 * chans[k]), size=(chans[k + 1], chans[k], 3, 3)).astype(self.dtype))
            for k in range(len(chans) - 1)
        ]
        self.bn = BatchNorm(classes, dtype=self.dtype)

    def params(self) -> dict[str, ad.Var]:
        out = {f"conv{k}.kernel": k_var for k, k_var in enumerate(self.kernels)}
        out["bn.gamma"] = self.bn.gamma
        out["bn.beta"] = self.bn.beta
        return out

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {name: var.value for name, var in self.params().items()}
        out["bn.running_mean"] = self.bn.running_mean
        out["bn.running_var"] = self.bn.running_var
        return out

    def load_state(self, tensors: dict[str, np.ndarray]) -> None:
        for name, var in self.params().items():
            var.value = np.array(tensors[name])
        self.bn.running_mean = np.array(tensors["bn.running_mean"])
        self.bn.running_var = np.array(tensors["bn.running_var"])

    def parameter_count(self) -> int:
        return sum(v.value.size for v in self.params().values())

    def logits(self, images: np.ndarray, training: bool) -> ad.Var:
        x = mean_center(images, self.dtype)
        batch, height, width = x.shape
        h = ad.Var(x.reshape(batch, 1, height, width))
        for kernel in self.kernels:
            h = ad.tanh(ad.conv3x3(h, kernel))
        pooled = ad.mean_axis(ad.mean_axis(h, axis=3), axis=2)  # (B, classes)
        return self.bn(pooled, training)

    def predict(self, images: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(images, training=False).value, axis=1)

    def loss(self, images: np.ndarray, labels: np.ndarray, training: bool = True) -> ad.Var:
        z = self.logits(images, training)
        weights = CLASS_WEIGHTS if self.classes == len(CLASS_WEIGHTS) else np.ones(self.classes)
        return ad.weighted_softmax_cross_entropy(z, labels, weights)


def flip_image_batch(images: np.ndarray, element: int) -> np.ndarray:
    """Apply a flip-group element to a (B, H, W) batch: 1 = rows, 2 = cols, 3 = both."""
    if element == 0:
        return images
    if element == 1:
        return images[:, ::-1, :]
    if element == 2:
        return images[:, :, ::-1]
    if element == 3:
        return images[:, ::-1, ::-1]
    raise ValueError(f"no flip-group element {element}")


def slot_flip_defect(net: ViererNet, images: np.ndarray) -> float:
    """Deviation from F^eps(flip_g x) = eps(g) flip_g(F^eps(x)), all slots and g."""
    _, chars = typed_filter_bases()
    base = net.slot_features(images).value  # (B, 4, C, H, W)
    worst = 0.0
    for g in range(4):
        flipped = net.slot_features(flip_image_batch(images, g)).value
        for idx, c in enumerate(chars):
            expected = c(g) * flip_feature_maps(base[:, idx], g)
            worst = max(worst, float(np.max(np.abs(flipped[:, idx] - expected))))
    return worst


def flip_feature_maps(maps: np.ndarray, element: int) -> np.ndarray:
    """Spatially flip (..., H, W) feature maps by a group element."""
    if element == 0:
        return maps
    if element == 1:
        return maps[..., ::-1, :]
    if element == 2:
        return maps[..., :, ::-1]
    return maps[..., ::-1, ::-1]
