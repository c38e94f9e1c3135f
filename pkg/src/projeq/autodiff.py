"""A small reverse-mode engine over numpy arrays.

Values are float64 or complex128 ndarrays wrapped in :class:`Var` nodes;
every primitive records its parents and a vector-Jacobian closure, and
``backward`` runs the tape in reverse topological order.

Complex support uses the conjugate-cotangent convention: the gradient
stored for a complex array z packs dL/dRe(z) + i dL/dIm(z).  With that
convention the pullback of a bilinear contraction multiplies by the
conjugated other operand (for w = A z the input cotangent is A^H g), and
a contribution flowing into a real-valued node is projected onto its real
part.  All adjoints here are checked against central finite differences
in the test suite.

Only what the networks need is implemented: elementwise arithmetic,
binary einsum contractions, shape ops, tanh/GeLU/sigmoid, a padded 3x3
convolution, and two fused losses.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Var:
    """A node in the tape: a value, its parents, and the local pullback."""

    __slots__ = ("value", "grad", "parents", "vjp", "name")

    _ALLOWED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64), np.dtype(np.complex64), np.dtype(np.complex128))

    def __init__(self, value, parents=(), vjp=None, name=None):
        self.value = np.asarray(value)
        if self.value.dtype not in self._ALLOWED_DTYPES:
            self.value = self.value.astype(np.float64)
        self.grad = None
        self.parents = tuple(parents)
        self.vjp = vjp
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def is_leaf(self):
        return not self.parents

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Var(self.value.copy())

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"Var{tag}(shape={self.value.shape}, dtype={self.value.dtype})"


def _wrap(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _accumulate(node: Var, delta: np.ndarray) -> None:
    if np.iscomplexobj(delta) and not np.iscomplexobj(node.value):
        delta = delta.real
    delta = np.asarray(delta)
    if delta.shape != node.value.shape:
        delta = _unbroadcast(delta, node.value.shape)
    delta = delta.astype(node.value.dtype, copy=False)  # gradients live in the node's dtype
    if node.grad is None:
        node.grad = delta.copy()
    else:
        node.grad = node.grad + delta


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(root: Var) -> None:
    """Reverse accumulation from a scalar root."""
    if root.value.size != 1:
        raise ValueError("backward expects a scalar loss node")
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.vjp is None or node.grad is None:
            continue
        for parent, delta in zip(node.parents, node.vjp(node.grad)):
            if delta is not None:
                _accumulate(parent, delta)


# ---------------------------------------------------------------------------
# Arithmetic


def add(a, b) -> Var:
    a, b = _wrap(a), _wrap(b)
    return Var(a.value + b.value, (a, b), lambda g: (g, g))


def neg(a) -> Var:
    a = _wrap(a)
    return Var(-a.value, (a,), lambda g: (-g,))


def sub(a, b) -> Var:
    return add(a, neg(b))


def mul(a, b) -> Var:
    """Elementwise (broadcasting) product."""
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value
    return Var(av * bv, (a, b), lambda g: (g * np.conj(bv), g * np.conj(av)))


def scale(a, c: float) -> Var:
    a = _wrap(a)
    return Var(a.value * c, (a,), lambda g: (g * np.conj(c),))


def pow_const(a, p: float) -> Var:
    """a ** p for real positive a (used for the batch-norm square root)."""
    a = _wrap(a)
    av = a.value
    out = av**p
    return Var(out, (a,), lambda g: (g * p * av ** (p - 1.0),))


def ein(spec: str, a, b) -> Var:
    """Binary einsum contraction.

    Every index of each operand must appear in the output or in the other
    operand (no internal sums within a single operand), which makes the
    pullback another einsum with the conjugated partner.
    """
    a, b = _wrap(a), _wrap(b)
    inputs, out = spec.split("->")
    sa, sb = inputs.split(",")
    for s in (sa, sb):
        if len(set(s)) != len(s):
            raise ValueError(f"repeated index within one operand in {spec!r}")
    if not set(sa) <= set(out) | set(sb) or not set(sb) <= set(out) | set(sa):
        raise ValueError(f"einsum spec {spec!r} sums an index inside a single operand")
    av, bv = a.value, b.value
    value = np.einsum(spec, av, bv, optimize=True)

    def vjp(g):
        ga = np.einsum(f"{out},{sb}->{sa}", g, np.conj(bv), optimize=True)
        gb = np.einsum(f"{sa},{out}->{sb}", np.conj(av), g, optimize=True)
        return ga, gb

    return Var(value, (a, b), vjp)


def matmul(a, b) -> Var:
    return ein("ij,jk->ik", a, b)


# ---------------------------------------------------------------------------
# Shape ops


def reshape(a, shape) -> Var:
    a = _wrap(a)
    old = a.value.shape
    return Var(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes) -> Var:
    a = _wrap(a)
    inverse = np.argsort(axes)
    return Var(a.value.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def narrow(a, axis: int, start: int, length: int) -> Var:
    """Slice ``length`` entries from ``axis`` starting at ``start``."""
    a = _wrap(a)
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def vjp(g):
        full = np.zeros_like(a.value)
        full[index] = g if not (np.iscomplexobj(g) and not np.iscomplexobj(full)) else g.real
        return (full,)

    return Var(a.value[index], (a,), vjp)


def concat(parts, axis: int) -> Var:
    parts = [_wrap(p) for p in parts]
    sizes = [p.value.shape[axis] for p in parts]
    value = np.concatenate([p.value for p in parts], axis=axis)

    def vjp(g):
        out = []
        start = 0
        for size in sizes:
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, start + size)
            out.append(g[tuple(index)])
            start += size
        return tuple(out)

    return Var(value, tuple(parts), vjp)


def stack(parts, axis: int = 0) -> Var:
    parts = [_wrap(p) for p in parts]
    value = np.stack([p.value for p in parts], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return Var(value, tuple(parts), vjp)


def sum_axis(a, axis=None, keepdims: bool = False) -> Var:
    a = _wrap(a)
    shape = a.value.shape
    value = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        gg = g
        if not keepdims:
            gg = np.expand_dims(g, axis)
        return (np.broadcast_to(gg, shape).copy(),)

    return Var(value, (a,), vjp)


def mean_axis(a, axis=None, keepdims: bool = False) -> Var:
    a = _wrap(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return scale(sum_axis(a, axis=axis, keepdims=keepdims), 1.0 / count)


def real(a) -> Var:
    a = _wrap(a)
    return Var(a.value.real.copy(), (a,), lambda g: (g.astype(np.complex128),))


def imag(a) -> Var:
    a = _wrap(a)
    return Var(a.value.imag.copy(), (a,), lambda g: (1j * g,))


# ---------------------------------------------------------------------------
# Nonlinearities


def tanh(a) -> Var:
    a = _wrap(a)
    out = np.tanh(a.value)
    return Var(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Var:
    a = _wrap(a)
    out = 1.0 / (1.0 + np.exp(-a.value))
    return Var(out, (a,), lambda g: (g * out * (1.0 - out),))


def gelu(a) -> Var:
    """Exact (erf-based) GeLU."""
    a = _wrap(a)
    x = a.value
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    out = x * cdf

    def vjp(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return (g * (cdf + x * pdf),)

    return Var(out, (a,), vjp)


def unit_modulus_tanh(a) -> Var:
    """z -> tanh(|z|) z / |z|; commutes with multiplication by unit scalars.

    Acts like plain tanh on real arrays (up to sign symmetry) and is smooth
    at 0 with slope 1.
    """
    a = _wrap(a)
    z = a.value
    r = np.abs(z)
    safe = np.where(r > 0, r, 1.0)
    t = np.tanh(r)
    factor = np.where(r > 0, t / safe, 1.0)
    out = factor * z

    def vjp(g):
        # isotropic factor plus the radial correction r g'(r) along z/|z|;
        # for real inputs the two combine to the usual 1 - tanh^2
        dt = 1.0 - t * t
        radial = np.where(r > 0, dt - factor, 0.0)
        unit = np.where(r > 0, z / safe, 0.0)
        inner = np.real(g * np.conj(unit))
        return (g * factor + inner * radial * unit,)

    return Var(out, (a,), vjp)


# ---------------------------------------------------------------------------
# Convolution (3x3, zero padding 1, stride 1)


def conv3x3(x, k) -> Var:
    """Correlation of (B, C, H, W) inputs with an (O, C, 3, 3) kernel stack."""
    x, k = _wrap(x), _wrap(k)
    xv, kv = x.value, k.value
    if np.iscomplexobj(xv) or np.iscomplexobj(kv):
        raise TypeError("conv3x3 is real-only")
    batch, cin, height, width = xv.shape
    cout = kv.shape[0]
    xp = np.pad(xv, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (B, C, H, W, 3, 3)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch * height * width, cin * 9)
    value = (cols @ kv.reshape(cout, cin * 9).T).reshape(batch, height, width, cout)
    value = np.ascontiguousarray(value.transpose(0, 3, 1, 2))

    def vjp(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(batch * height * width, cout)
        gk = (gmat.T @ cols).reshape(cout, cin, 3, 3)
        gp = np.pad(g, ((0, 0), (0, 0), (2, 2), (2, 2)))
        gwin = sliding_window_view(gp, (3, 3), axis=(2, 3))[:, :, 1 : height + 1, 1 : width + 1]
        gcols = gwin.transpose(0, 2, 3, 1, 4, 5).reshape(batch * height * width, cout * 9)
        krot = kv[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(cin, cout * 9)
        gx = (gcols @ krot.T).reshape(batch, height, width, cin).transpose(0, 3, 1, 2)
        return gx, gk

    return Var(value, (x, k), vjp)


# ---------------------------------------------------------------------------
# Fused losses


def weighted_softmax_cross_entropy(logits, labels: np.ndarray, weights: np.ndarray) -> Var:
    """-w[y] log softmax(z)[y], averaged with weight normalization.

    ``labels`` and ``weights`` are constants (int and float arrays).
    """
    logits = _wrap(logits)
    z = logits.value
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(labels < 0) or np.any(labels >= z.shape[1]):
        raise ValueError("label index out of range")
    zmax = z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)) + zmax
    logp = z - logsumexp
    w = weights[labels].astype(z.dtype)
    wsum = w.sum()
    value = np.array(-(w * logp[np.arange(z.shape[0]), labels]).sum() / wsum)

    def vjp(g):
        soft = np.exp(logp)
        grad = soft * w[:, None]
        grad[np.arange(z.shape[0]), labels] -= w
        return (g * grad / wsum,)

    return Var(value, (logits,), vjp)


def spinor_sign_loss(pred, target: np.ndarray) -> Var:
    """min(|p - t|, |p + t|) per sample, averaged over the batch.

    The subgradient follows the active branch; exact ties take the minus
    branch.  ``target`` is a constant (B, 2) complex array.
    """
    pred = _wrap(pred)
    p = pred.value
    t = np.asarray(target, dtype=np.complex128)
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {p.shape} != target shape {t.shape}")
    dminus = np.sqrt(np.sum(np.abs(p - t) ** 2, axis=1))
    dplus = np.sqrt(np.sum(np.abs(p + t) ** 2, axis=1))
    take_minus = dminus <= dplus
    d = np.where(take_minus, dminus, dplus)
    value = np.array(d.mean())

    def vjp(g):
        safe = np.where(d > 0, d, 1.0)
        direction = np.where(take_minus[:, None], p - t, p + t)
        grad = np.where(d[:, None] > 0, direction / safe[:, None], 0.0)
        return (g * grad / p.shape[0],)

    return Var(value, (pred,), vjp)


def per_sample_sign_loss(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Loss values per sample, outside the tape (for metrics)."""
    dminus = np.sqrt(np.sum(np.abs(pred - target) ** 2, axis=1))
    dplus = np.sqrt(np.sum(np.abs(pred + target) ** 2, axis=1))
    return np.minimum(dminus, dplus)
