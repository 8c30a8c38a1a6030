"""Report figures: ROC, accuracy-rejection, and reliability diagrams.

Rendered to files by the evaluate command alongside the JSON/CSV output;
the core metrics module stays plot-free.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

matplotlib.rcParams.update({
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
})

METHOD_ORDER = (
    "verbalized",
    "latent",
    "consistency",
    "hybrid_without_aleatoric",
    "hybrid_with_aleatoric",
)


def _ordered(methods: Mapping[str, dict]) -> list[str]:
    known = [m for m in METHOD_ORDER if m in methods]
    return known + sorted(set(methods) - set(known))


def render_roc(methods: Mapping[str, dict], path: str | Path) -> None:
    """One ROC axes for all methods; legend shows (AUROC, AUARC)."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name in _ordered(methods):
        rep = methods[name]
        xs, ys = zip(*rep["roc"])
        ax.plot(xs, ys, label=f"{name} ({rep['auroc']:.3f}, {rep['auarc']:.3f})")
    ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right")
    fig.savefig(path)
    plt.close(fig)


def render_arc(methods: Mapping[str, dict], baseline_accuracy: float, path: str | Path) -> None:
    """Accuracy-rejection curves with the no-selection accuracy as reference."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name in _ordered(methods):
        rep = methods[name]
        xs, ys = zip(*rep["arc"])
        ax.plot(xs, ys, label=name)
    ax.axhline(baseline_accuracy, linestyle=":", color="gray", linewidth=1,
               label=f"no selection ({baseline_accuracy:.3f})")
    ax.set_xlabel("rejection rate")
    ax.set_ylabel("accuracy of retained predictions")
    ax.set_xlim(0, 1)
    ax.legend(loc="lower right")
    fig.savefig(path)
    plt.close(fig)


def render_reliability(methods: Mapping[str, dict], path: str | Path) -> None:
    """Per-method reliability diagrams against the perfect-calibration diagonal."""
    names = _ordered(methods)
    cols = min(3, len(names))
    rows = math.ceil(len(names) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 3.0 * rows), squeeze=False)
    for ax in axes.flat[len(names):]:
        ax.set_visible(False)
    for ax, name in zip(axes.flat, names):
        rep = methods[name]
        filled = [b for b in rep["reliability_bins"] if b["count"]]
        conf = [b["mean_confidence"] for b in filled]
        acc = [b["empirical_accuracy"] for b in filled]
        width = 1.0 / max(len(rep["reliability_bins"]), 1)
        centers = [(b["lower"] + b["upper"]) / 2 for b in filled]
        ax.bar(centers, acc, width=width * 0.9, color="tab:blue", alpha=0.6, edgecolor="black")
        ax.plot(conf, acc, marker="o", color="tab:red", linewidth=1, markersize=3)
        ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=1)
        ax.set_title(f"{name} (ECE {rep['ece']:.3f})", fontsize=9)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_xlabel("confidence")
        ax.set_ylabel("empirical accuracy")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_all(methods: Mapping[str, dict], baseline_accuracy: float, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    paths = [out / "roc.png", out / "arc.png", out / "reliability.png"]
    render_roc(methods, paths[0])
    render_arc(methods, baseline_accuracy, paths[1])
    render_reliability(methods, paths[2])
    return paths
