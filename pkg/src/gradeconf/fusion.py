"""Feature fusion and Platt-scaled cross-validated calibration.

The hybrid scorer feeds [s_verb, s_lat, s_cons, (s_alea), token_len] into a
random forest and calibrates its scores with a per-fold sigmoid: for each of
five stratified folds, a forest is trained on the remaining folds and a
sigmoid 1/(1+exp(A*f+B)) is fitted on the held-out fold's scores. Prediction
averages the five calibrated fold models. Single-signal baselines reuse the
same machinery with the identity in place of the forest.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError
from .forest import TreeEnsemble, ensemble_scores, train_ensemble, tree_from_nested, tree_to_nested
from .signals import SignalSet

FEATURES_WITH_ALEATORIC = ("s_verb", "s_lat", "s_cons", "s_alea", "token_len")
FEATURES_WITHOUT_ALEATORIC = ("s_verb", "s_lat", "s_cons", "token_len")

# Newton solver bounds for the sigmoid fit
PLATT_MAX_ITER = 100
PLATT_GRAD_TOL = 1e-10


def build_features(
    signal_set: SignalSet, s_alea: float | None, token_len: int, include_alea: bool
) -> np.ndarray:
    """Assemble one feature vector in the documented order."""
    if include_alea:
        if s_alea is None:
            raise ValueError("include_alea requires an aleatoric uncertainty value")
        return np.array(
            [signal_set.s_verb, signal_set.s_lat, signal_set.s_cons, s_alea, float(token_len)]
        )
    return np.array([signal_set.s_verb, signal_set.s_lat, signal_set.s_cons, float(token_len)])


def _sigmoid_calibrated(raw: np.ndarray, a: float, b: float) -> np.ndarray:
    """p = 1/(1 + exp(a*raw + b)), computed without overflow."""
    z = a * np.asarray(raw, dtype=float) + b
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def platt_nll(raw_scores, labels, a: float, b: float, smooth_targets: bool = True) -> float:
    """Negative log-likelihood of the sigmoid under Platt's smoothed targets."""
    scores = np.asarray(raw_scores, dtype=float)
    t = _platt_targets(np.asarray(labels, dtype=int), smooth_targets)
    z = a * scores + b
    return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))


def _platt_targets(y: np.ndarray, smooth_targets: bool) -> np.ndarray:
    if not smooth_targets:
        return y.astype(float)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    t_pos = (n_pos + 1.0) / (n_pos + 2.0)
    t_neg = 1.0 / (n_neg + 2.0)
    return np.where(y == 1, t_pos, t_neg)


def platt_fit(raw_scores, labels, smooth_targets: bool = True) -> tuple[float, float]:
    """Fit sigmoid parameters (A, B) by damped Newton iteration.

    Minimizes the smoothed-target negative log-likelihood (raw {0,1}
    targets when smoothing is disabled) until the gradient norm drops
    below 1e-10 or 100 iterations pass.
    """
    scores = np.asarray(raw_scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise CalibrationError("platt_fit needs both classes present")

    t = _platt_targets(y, smooth_targets)
    a = 0.0
    b = float(np.log((n_neg + 1.0) / (n_pos + 1.0)))

    def nll(a_: float, b_: float) -> float:
        z = a_ * scores + b_
        return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))

    current = nll(a, b)
    for _ in range(PLATT_MAX_ITER):
        p = _sigmoid_calibrated(scores, a, b)
        residual = t - p
        grad = np.array([np.dot(residual, scores), residual.sum()])
        if np.max(np.abs(grad)) < PLATT_GRAD_TOL:
            break
        w = p * (1.0 - p)
        h11 = np.dot(w, scores * scores)
        h12 = np.dot(w, scores)
        h22 = w.sum()
        hess = np.array([[h11, h12], [h12, h22]]) + 1e-12 * np.eye(2)
        step = np.linalg.solve(hess, grad)
        # backtrack until the objective actually decreases
        alpha = 1.0
        while alpha >= 1e-10:
            cand = nll(a - alpha * step[0], b - alpha * step[1])
            if cand < current:
                break
            alpha /= 2.0
        else:
            break
        a -= alpha * step[0]
        b -= alpha * step[1]
        current = cand
    return float(a), float(b)


@dataclass
class FoldModel:
    ensemble: TreeEnsemble | None  # None for single-signal baselines
    a: float
    b: float
    held_out: np.ndarray  # row indices of the fold used for the sigmoid fit


@dataclass
class CalibratedScorer:
    """Five calibrated fold models whose predictions are averaged."""

    variant: str
    feature_names: tuple[str, ...]
    folds: list[FoldModel]
    seed: int
    t: int
    mode: str = "per_fold"  # or "pooled": one sigmoid over pooled out-of-fold scores
    pooled_sigmoid: tuple[float, float] | None = None

    def predict(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if len(self.feature_names) == 1:
            raw_rows = np.tile(X.reshape(-1), (len(self.folds), 1))
        else:
            raw_rows = np.vstack([ensemble_scores(f.ensemble, X) for f in self.folds])
        if self.mode == "pooled":
            a, b = self.pooled_sigmoid
            return _sigmoid_calibrated(raw_rows.mean(axis=0), a, b)
        calibrated = [
            _sigmoid_calibrated(raw, f.a, f.b) for raw, f in zip(raw_rows, self.folds)
        ]
        return np.mean(calibrated, axis=0)


def stratified_fold_indices(labels, folds: int, seed: int) -> np.ndarray:
    """Deal each class round-robin into folds after a seeded shuffle.

    Per-fold positive counts differ by at most one.
    """
    y = np.asarray(labels, dtype=int)
    if len(y) < folds:
        raise CalibrationError(f"need at least {folds} examples for {folds}-fold calibration")
    rng = np.random.default_rng([seed, 997])
    assignment = np.zeros(len(y), dtype=int)
    for label in (0, 1):
        idx = np.nonzero(y == label)[0]
        idx = idx[rng.permutation(len(idx))]
        assignment[idx] = np.arange(len(idx)) % folds
    return assignment


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def _check_folds(y: np.ndarray, fold_of: np.ndarray, folds: int, need_train_classes: bool) -> None:
    for f in range(folds):
        held = y[fold_of == f]
        if len(np.unique(held)) < 2:
            raise CalibrationError(
                f"fold {f} holds a single class after stratification; corpus too small to calibrate"
            )
        if need_train_classes:
            train = y[fold_of != f]
            if (train == 1).sum() < 2 or (train == 0).sum() < 2:
                raise CalibrationError(
                    f"training folds opposite fold {f} lack 2 examples per class"
                )


def calibrate_cv(
    features,
    labels,
    variant: str,
    feature_names: Sequence[str],
    folds: int = 5,
    t: int = 500,
    seed: int = 0,
    mode: str = "per_fold",
    smooth_targets: bool = True,
) -> CalibratedScorer:
    """Train per-fold forests and fit each fold's sigmoid on its held-out part."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    fold_of = stratified_fold_indices(y, folds, seed)
    _check_folds(y, fold_of, folds, need_train_classes=True)

    fold_models: list[FoldModel] = []
    pooled_raw: list[np.ndarray] = []
    pooled_y: list[np.ndarray] = []
    for f in range(folds):
        held = np.nonzero(fold_of == f)[0]
        train = np.nonzero(fold_of != f)[0]
        ensemble = train_ensemble(X[train], y[train], t=t, seed=_fold_seed(seed, f))
        raw = ensemble_scores(ensemble, X[held])
        a, b = platt_fit(raw, y[held], smooth_targets)
        fold_models.append(FoldModel(ensemble=ensemble, a=a, b=b, held_out=held))
        pooled_raw.append(raw)
        pooled_y.append(y[held])

    pooled_sigmoid = None
    if mode == "pooled":
        pooled_sigmoid = platt_fit(
            np.concatenate(pooled_raw), np.concatenate(pooled_y), smooth_targets
        )
    return CalibratedScorer(
        variant=variant,
        feature_names=tuple(feature_names),
        folds=fold_models,
        seed=seed,
        t=t,
        mode=mode,
        pooled_sigmoid=pooled_sigmoid,
    )


def calibrate_baseline(
    signal_values,
    labels,
    variant: str,
    folds: int = 5,
    seed: int = 0,
    mode: str = "per_fold",
    smooth_targets: bool = True,
) -> CalibratedScorer:
    """Five-fold Platt calibration of a single signal (identity ensemble)."""
    values = np.asarray(signal_values, dtype=float)
    y = np.asarray(labels, dtype=int)
    fold_of = stratified_fold_indices(y, folds, seed)
    _check_folds(y, fold_of, folds, need_train_classes=False)

    fold_models: list[FoldModel] = []
    for f in range(folds):
        held = np.nonzero(fold_of == f)[0]
        a, b = platt_fit(values[held], y[held], smooth_targets)
        fold_models.append(FoldModel(ensemble=None, a=a, b=b, held_out=held))

    pooled_sigmoid = None
    if mode == "pooled":
        pooled_sigmoid = platt_fit(values, y, smooth_targets)
    return CalibratedScorer(
        variant=variant,
        feature_names=(variant,),
        folds=fold_models,
        seed=seed,
        t=0,
        mode=mode,
        pooled_sigmoid=pooled_sigmoid,
    )


def _with_recursion_headroom(fn, *args):
    # nested tree JSON can exceed the default interpreter recursion limit
    limit = sys.getrecursionlimit()
    try:
        sys.setrecursionlimit(max(limit, 50_000))
        return fn(*args)
    finally:
        sys.setrecursionlimit(limit)


def save_scorer(scorer: CalibratedScorer, path: str | Path) -> None:
    folds = []
    for fm in scorer.folds:
        entry = {
            "sigmoid": {"a": fm.a, "b": fm.b},
            "held_out": [int(i) for i in fm.held_out],
            "ensemble": None,
        }
        if fm.ensemble is not None:
            entry["ensemble"] = {
                "t": fm.ensemble.t,
                "seed": fm.ensemble.seed,
                "feature_subsample": fm.ensemble.feature_subsample,
                "n_features": fm.ensemble.n_features,
                "trees": [tree_to_nested(tree) for tree in fm.ensemble.trees],
            }
        folds.append(entry)
    obj = {
        "variant": scorer.variant,
        "feature_names": list(scorer.feature_names),
        "seed": scorer.seed,
        "t": scorer.t,
        "mode": scorer.mode,
        "pooled_sigmoid": list(scorer.pooled_sigmoid) if scorer.pooled_sigmoid else None,
        "folds": folds,
    }
    text = _with_recursion_headroom(json.dumps, obj)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def load_scorer(path: str | Path) -> CalibratedScorer:
    with open(path, "r", encoding="utf-8") as fh:
        obj = _with_recursion_headroom(json.loads, fh.read())
    folds = []
    for entry in obj["folds"]:
        ensemble = None
        if entry["ensemble"] is not None:
            e = entry["ensemble"]
            ensemble = TreeEnsemble(
                trees=[tree_from_nested(tree) for tree in e["trees"]],
                t=int(e["t"]),
                seed=int(e["seed"]),
                feature_subsample=int(e["feature_subsample"]),
                n_features=int(e["n_features"]),
            )
        folds.append(
            FoldModel(
                ensemble=ensemble,
                a=float(entry["sigmoid"]["a"]),
                b=float(entry["sigmoid"]["b"]),
                held_out=np.asarray(entry["held_out"], dtype=int),
            )
        )
    pooled = obj.get("pooled_sigmoid")
    return CalibratedScorer(
        variant=obj["variant"],
        feature_names=tuple(obj["feature_names"]),
        folds=folds,
        seed=int(obj["seed"]),
        t=int(obj["t"]),
        mode=obj.get("mode", "per_fold"),
        pooled_sigmoid=tuple(pooled) if pooled else None,
    )
