"""Matplotlib renderings written next to the delimited outputs.

Every CLI command that produces CSV or JSON also drops a figure: training
curves beside the metrics, and the typed filter bases as a grid of
heatmaps beside the basis export.  Figures are informational; the CSV and
JSON files remain the machine-readable contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_training_curves(metrics, path, title: str = "") -> None:
    epochs = sorted({r.epoch for r in metrics})
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    for split, color in (("train", "tab:blue"), ("eval", "tab:orange")):
        rows = [r for r in metrics if r.split == split]
        if not rows:
            continue
        axes[0].plot([r.epoch for r in rows], [r.loss for r in rows], color=color, label=split)
        axes[1].plot([r.epoch for r in rows], [r.accuracy for r in rows], color=color, label=split)
    axes[0].set_xlabel("epoch")
    axes[0].set_ylabel("loss")
    axes[1].set_xlabel("epoch")
    axes[1].set_ylabel("accuracy")
    for ax in axes:
        ax.legend(frameon=False)
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    del epochs


def save_filter_basis_figure(bases: dict, path) -> None:
    """Heatmap grid: one row per character, one column per basis kernel."""
    names = list(bases.keys())
    max_cols = max(len(v) for v in bases.values())
    fig, axes = plt.subplots(len(names), max_cols, figsize=(2.0 * max_cols, 2.0 * len(names)), squeeze=False)
    vmax = max(float(np.max(np.abs(np.asarray(k)))) for v in bases.values() for k in v)
    for r, name in enumerate(names):
        kernels = bases[name]
        for c in range(max_cols):
            ax = axes[r][c]
            ax.set_xticks([])
            ax.set_yticks([])
            if c < len(kernels):
                ax.imshow(np.asarray(kernels[c]), cmap="RdBu_r", vmin=-vmax, vmax=vmax)
                if c == 0:
                    ax.set_ylabel(name, rotation=0, ha="right", va="center")
            else:
                ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_accuracy_comparison(curves: dict[str, list], path, ylabel: str = "eval accuracy") -> None:
    """Median curves across repeats for several models on one axis."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for name, runs in curves.items():
        arr = np.asarray(runs)  # (repeats, epochs)
        med = np.median(arr, axis=0)
        ax.plot(np.arange(len(med)), med, label=name)
        if arr.shape[0] > 1:
            ax.fill_between(np.arange(len(med)), arr.min(axis=0), arr.max(axis=0), alpha=0.15)
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
