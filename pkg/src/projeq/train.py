"""Optimizers, the training loop, and metric records.

Training is deliberately plain: shuffled minibatches, Adam with bias
correction, per-epoch train/eval metrics.  Everything is deterministic
given the seed; shuffling uses the same counter-based generators as the
dataset code, so reruns produce byte-identical metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from projeq import autodiff as ad
from projeq.data import stream_rng


class DivergenceError(RuntimeError):
    """Raised when a loss or gradient stops being finite."""

    def __init__(self, message: str, last_good: dict | None = None):
        super().__init__(message)
        self.last_good = last_good


class Adam:
    """Standard Adam with bias correction over a named parameter dict."""

    def __init__(self, params: dict[str, ad.Var], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v.value) for k, v in params.items()}
        self.v = {k: np.zeros_like(v.value) for k, v in params.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise DivergenceError(f"non-finite gradient in parameter {name!r} at step {self.t}")
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * np.abs(g) ** 2
            mhat = self.m[name] / (1 - self.beta1**self.t)
            vhat = self.v[name] / (1 - self.beta2**self.t)
            p.value = p.value - self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


@dataclass
class MetricRow:
    epoch: int
    split: str
    loss: float
    accuracy: float

    def as_csv(self) -> str:
        return f"{self.epoch},{self.split},{self.loss:.10g},{self.accuracy:.10g}"


@dataclass
class TrainResult:
    metrics: list[MetricRow] = field(default_factory=list)
    final_state: dict | None = None
    diverged: bool = False

    def rows_for(self, split: str) -> list[MetricRow]:
        return [r for r in self.metrics if r.split == split]


def iterate_batches(count: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield order[start : start + batch_size]


def train_loop(model, train_batch_fn, eval_batch_fn, n_train: int, n_eval: int, epochs: int, lr: float, batch_size: int, seed: int) -> TrainResult:
    """Generic minibatch loop.

    ``train_batch_fn(indices, training)`` must return (loss Var, accuracy
    float) for the given sample indices, and similarly for eval.  The
    model supplies ``params()`` and ``state_tensors()``.  On divergence
    the last finished epoch's state rides along in the exception.
    """
    optimizer = Adam(model.params(), lr=lr)
    result = TrainResult()
    last_good = {k: np.array(v) for k, v in model.state_tensors().items()}
    for epoch in range(epochs):
        rng = stream_rng(seed, 300, epoch)
        losses = []
        accs = []
        sizes = []
        for idx in iterate_batches(n_train, batch_size, rng):
            optimizer.zero_grad()
            loss, acc = train_batch_fn(idx, True)
            value = float(loss.value)
            if not np.isfinite(value):
                raise DivergenceError(f"training loss became {value} in epoch {epoch}", last_good)
            ad.backward(loss)
            optimizer.step()
            losses.append(value)
            accs.append(acc)
            sizes.append(len(idx))
        weights = np.asarray(sizes, dtype=np.float64)
        result.metrics.append(
            MetricRow(epoch, "train", float(np.average(losses, weights=weights)), float(np.average(accs, weights=weights)))
        )
        eval_losses = []
        eval_accs = []
        eval_sizes = []
        for idx in iterate_batches(n_eval, batch_size, np.random.Generator(np.random.Philox(1))):
            loss, acc = eval_batch_fn(idx, False)
            eval_losses.append(float(loss.value))
            eval_accs.append(acc)
            eval_sizes.append(len(idx))
        weights = np.asarray(eval_sizes, dtype=np.float64)
        result.metrics.append(
            MetricRow(epoch, "eval", float(np.average(eval_losses, weights=weights)), float(np.average(eval_accs, weights=weights)))
        )
        last_good = {k: np.array(v) for k, v in model.state_tensors().items()}
    result.final_state = last_good
    return result


def classifier_batch_fn(model, images: np.ndarray, labels: np.ndarray, weights: np.ndarray):
    """One forward pass per batch; accuracy read off the same logits."""

    def fn(idx, training):
        z = model.logits(images[idx], training=training)
        loss = ad.weighted_softmax_cross_entropy(z, labels[idx], weights)
        acc = float(np.mean(np.argmax(z.value, axis=1) == labels[idx]))
        return loss, acc

    return fn


def spinor_batch_fn(model, dataset, threshold: float = 0.1):
    """Sign-ambiguous regression loss; accuracy = fraction below ``threshold``."""

    def fn(idx, training):
        pos, spin, targ = dataset.positions[idx], dataset.spinors[idx], dataset.targets[idx]
        out = model.forward(pos, spin)
        loss = ad.spinor_sign_loss(out, targ)
        per_sample = ad.per_sample_sign_loss(out.value, targ)
        acc = float(np.mean(per_sample < threshold))
        return loss, acc

    return fn
