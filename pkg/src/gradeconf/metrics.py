"""Selective-prediction and reliability metrics.

ROC/ARC rank grading decisions by decision confidence max(p, 1-p) and
measure decision correctness; reliability metrics (Brier/ECE/MCE) compare
the oriented probability p against the gold label directly. The ROC is also
computed in the oriented-probability-vs-gold framing and reported alongside
the headline decision-correctness number.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MetricUndefinedError

REJECTION_GRID = tuple(round(0.1 * i, 1) for i in range(10))


@dataclass(frozen=True)
class EvalItem:
    """One scored response: oriented P(correct), gold label, optional LLM decision.

    The grading decision is the LLM's own prediction when ``pred_label`` is
    given (single-signal baselines); otherwise the oriented probability is
    thresholded at 0.5.
    """

    confidence_correct: float
    gold_label: int
    pred_label: int | None = None

    @property
    def decision(self) -> int:
        if self.pred_label is not None:
            return self.pred_label
        return 1 if self.confidence_correct >= 0.5 else 0

    @property
    def decision_correct(self) -> int:
        return 1 if self.decision == self.gold_label else 0

    @property
    def decision_confidence(self) -> float:
        return max(self.confidence_correct, 1.0 - self.confidence_correct)


@dataclass
class ReliabilityReport:
    bins: list[dict]  # lower, upper, count, mean_confidence, empirical_accuracy
    brier: float
    ece: float
    mce: float


@dataclass
class MethodReport:
    """All Table-1 / selective-prediction quantities for one method."""

    n: int
    accuracy: float  # no-rejection decision accuracy
    auroc: float
    auroc_vs_gold: float
    auarc: float
    brier: float
    ece: float
    mce: float
    accuracy_at_rejection: dict[str, float]
    operating_point: dict[str, float]
    roc_points: list[tuple[float, float]]
    roc_points_vs_gold: list[tuple[float, float]]
    arc_points: list[tuple[float, float]]
    reliability_bins: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "auroc": self.auroc,
            "auroc_vs_gold": self.auroc_vs_gold,
            "auarc": self.auarc,
            "brier": self.brier,
            "ece": self.ece,
            "mce": self.mce,
            "accuracy_at_rejection": self.accuracy_at_rejection,
            "operating_point": self.operating_point,
            "roc": [[x, y] for x, y in self.roc_points],
            "roc_vs_gold": [[x, y] for x, y in self.roc_points_vs_gold],
            "arc": [[x, y] for x, y in self.arc_points],
            "reliability_bins": self.reliability_bins,
        }


def _roc_curve(scores: np.ndarray, targets: np.ndarray) -> tuple[list[tuple[float, float]], float]:
    n_pos = int(targets.sum())
    n_neg = len(targets) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError(
            f"ROC undefined: need both outcomes, got {n_pos} positive / {n_neg} negative"
        )
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = targets[order]
    tp = np.cumsum(t)
    fp = np.arange(1, len(t) + 1) - tp
    # one curve point per distinct score (tie groups collapse)
    last_of_group = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    fpr = np.concatenate([[0.0], fp[last_of_group] / n_neg])
    tpr = np.concatenate([[0.0], tp[last_of_group] / n_pos])
    auroc = float(np.trapezoid(tpr, fpr))
    return list(zip(fpr.tolist(), tpr.tolist())), auroc


def roc_auroc(items: Sequence[EvalItem]) -> tuple[list[tuple[float, float]], float]:
    """ROC of decision confidence against decision correctness."""
    scores = np.array([it.decision_confidence for it in items])
    targets = np.array([it.decision_correct for it in items])
    return _roc_curve(scores, targets)


def roc_auroc_vs_gold(items: Sequence[EvalItem]) -> tuple[list[tuple[float, float]], float]:
    """ROC of the oriented probability against the gold label."""
    scores = np.array([it.confidence_correct for it in items])
    targets = np.array([it.gold_label for it in items])
    return _roc_curve(scores, targets)


def arc_auarc(items: Sequence[EvalItem]) -> tuple[list[tuple[float, float]], float]:
    """Accuracy of retained decisions at rejection counts 0..n-1.

    The r lowest-confidence items are rejected first (ties keep input
    order); the area integrates rejection fractions 0 to (n-1)/n.
    """
    if len(items) == 0:
        raise MetricUndefinedError("ARC undefined on an empty item list")
    n = len(items)
    conf = np.array([it.decision_confidence for it in items])
    correct = np.array([it.decision_correct for it in items], dtype=float)
    order = np.argsort(conf, kind="stable")
    correct = correct[order]
    remaining = np.concatenate([[correct.sum()], correct.sum() - np.cumsum(correct)[:-1]])
    retained = n - np.arange(n)
    accuracy = remaining / retained
    fractions = np.arange(n) / n
    points = list(zip(fractions.tolist(), accuracy.tolist()))
    auarc = float(np.trapezoid(accuracy, fractions))
    return points, auarc


def reliability(items: Sequence[EvalItem], n_bins: int = 10) -> ReliabilityReport:
    """Equal-width reliability bins plus Brier/ECE/MCE.

    Bins are [lower, upper) with a right-inclusive final bin; empty bins
    appear in the report with null statistics and do not enter ECE/MCE.
    """
    if len(items) == 0 or n_bins < 1:
        raise MetricUndefinedError("reliability needs at least one item and one bin")
    p = np.array([it.confidence_correct for it in items])
    y = np.array([it.gold_label for it in items], dtype=float)
    n = len(items)

    brier = float(np.mean((p - y) ** 2))
    which = np.clip(np.floor(p * n_bins).astype(int), 0, n_bins - 1)

    bins = []
    ece = 0.0
    mce = 0.0
    for b in range(n_bins):
        mask = which == b
        count = int(mask.sum())
        entry = {
            "lower": b / n_bins,
            "upper": (b + 1) / n_bins,
            "count": count,
            "mean_confidence": None,
            "empirical_accuracy": None,
        }
        if count:
            conf = float(p[mask].mean())
            acc = float(y[mask].mean())
            entry["mean_confidence"] = conf
            entry["empirical_accuracy"] = acc
            gap = abs(acc - conf)
            ece += (count / n) * gap
            mce = max(mce, gap)
        bins.append(entry)
    return ReliabilityReport(bins=bins, brier=brier, ece=ece, mce=mce)


def operating_point(arc_points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """ARC point maximizing retained_accuracy - rejection; ties take smallest r."""
    if len(arc_points) == 0:
        raise MetricUndefinedError("operating point needs a nonempty ARC")
    best = arc_points[0]
    for r, acc in arc_points[1:]:
        if acc - r > best[1] - best[0]:
            best = (r, acc)
    return best


def accuracy_at_rejection(arc_points: Sequence[tuple[float, float]], fraction: float) -> float:
    """Retained accuracy at the curve point nearest the requested fraction.

    The rejection count is round-half-up of fraction * n, capped at n-1.
    """
    n = len(arc_points)
    r = min(int(math.floor(fraction * n + 0.5)), n - 1)
    return arc_points[r][1]


def evaluate_method(items: Sequence[EvalItem], n_bins: int = 10) -> MethodReport:
    """Compose all metrics for one confidence method into a report."""
    roc_points, auroc = roc_auroc(items)
    roc_gold_points, auroc_gold = roc_auroc_vs_gold(items)
    arc_points, auarc = arc_auarc(items)
    rel = reliability(items, n_bins)
    op_r, op_acc = operating_point(arc_points)
    acc_grid = {
        f"{frac:.1f}": accuracy_at_rejection(arc_points, frac) for frac in REJECTION_GRID
    }
    return MethodReport(
        n=len(items),
        accuracy=arc_points[0][1],
        auroc=auroc,
        auroc_vs_gold=auroc_gold,
        auarc=auarc,
        brier=rel.brier,
        ece=rel.ece,
        mce=rel.mce,
        accuracy_at_rejection=acc_grid,
        operating_point={"rejection": op_r, "accuracy": op_acc},
        roc_points=roc_points,
        roc_points_vs_gold=roc_gold_points,
        arc_points=arc_points,
        reliability_bins=rel.bins,
    )


def write_curves_csv(path: str | Path, curves: dict[str, Sequence[tuple[float, float]]]) -> None:
    """Write one curve family for all methods as x,y,method rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "method"])
        for method in curves:
            for x, y in curves[method]:
                writer.writerow([repr(float(x)), repr(float(y)), method])
