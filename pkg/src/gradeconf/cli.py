"""Staged command-line pipeline: split, cluster, fuse, evaluate.

Each command reads declared input files and writes its outputs atomically
(temp file + rename), so the slow extraction stage and the fast analysis
stages stay decoupled at the JSONL interchange format. Validation failures
exit 1 with a single-line machine-parseable error; I/O failures exit 2.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import aleatoric, corpus, figures, fusion, metrics, signals
from .errors import (
    CalibrationError,
    ClusteringError,
    CorpusParseError,
    GradeconfError,
    MetricUndefinedError,
    SchemaError,
    SignalError,
    StratificationError,
    TrainingError,
)

SEED_ENV = "GRADECONF_SEED"

BASELINE_SIGNALS = ("verbalized", "latent", "consistency")
METHODS = BASELINE_SIGNALS + ("hybrid_without_aleatoric", "hybrid_with_aleatoric")
SCORER_FILES = {
    "verbalized": "baseline_verbalized.json",
    "latent": "baseline_latent.json",
    "consistency": "baseline_consistency.json",
    "hybrid_without_aleatoric": "hybrid_without_aleatoric.json",
    "hybrid_with_aleatoric": "hybrid_with_aleatoric.json",
}

_ERROR_KINDS = (
    (CorpusParseError, "parse"),
    (SchemaError, "schema"),
    (StratificationError, "stratification"),
    (SignalError, "signal"),
    (ClusteringError, "clustering"),
    (TrainingError, "training"),
    (CalibrationError, "calibration"),
    (MetricUndefinedError, "metric"),
)


class MissingInputError(GradeconfError):
    pass


@contextlib.contextmanager
def _atomic(path: Path):
    """Yield a temp path in the destination directory, then rename over it."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    tmp_path = Path(tmp)
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    finally:
        tmp_path.unlink(missing_ok=True)


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise MissingInputError(f"{what} file not found: {p}")
    return p


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = _require_file(path, "config")
    with open(p, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise SchemaError(f"config file {p} must hold a JSON object")
    return obj


def _setting(args: argparse.Namespace, file_cfg: dict, key: str, default):
    value = getattr(args, key, None)
    if value is None:
        value = file_cfg.get(key, default)
    return value


def _path_setting(args: argparse.Namespace, file_cfg: dict, key: str, flag: str) -> str:
    value = _setting(args, file_cfg, key, None)
    if value is None:
        raise ValueError(f"missing required setting {flag} (or config key {key!r})")
    return str(value)


def _parse_k_grid(value) -> list[int] | None:
    if value is None:
        return None
    if isinstance(value, str):
        return [int(v) for v in value.split(",") if v.strip()]
    return [int(v) for v in value]


def _signal_sets(pairs, strict: bool):
    sets = []
    missing = 0
    for _, raw in pairs:
        if raw.verbalized is None:
            missing += 1
        sets.append(signals.build_signal_set(raw, strict=strict))
    return sets, missing


def _select(pairs, ids):
    picked = [(rec, raw) for rec, raw in pairs if rec.id in ids]
    if len(picked) != len(ids):
        known = {rec.id for rec, _ in pairs}
        lost = sorted(ids - known)[:3]
        raise SchemaError(f"split references ids missing from the corpus, e.g. {lost}")
    return sorted(picked, key=lambda pr: pr[0].id)


def cmd_split(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    fraction = float(_setting(args, cfg, "calibration_fraction", 0.10))
    seed = int(_setting(args, cfg, "seed", _default_seed()))
    corpus_path = _require_file(_path_setting(args, cfg, "corpus", "--corpus"), "corpus")

    pairs = corpus.load_corpus(corpus_path)
    records = [rec for rec, _ in pairs]
    split = corpus.stratified_split(records, fraction, seed)
    out = Path(_path_setting(args, cfg, "out", "--out"))
    with _atomic(out) as tmp:
        corpus.save_split(split, tmp)

    positives = sum(r.gold_label for r in records)
    cal_pos = sum(r.gold_label for r in records if r.id in split.calibration_ids)
    print(
        f"split: n={len(records)} positives={positives} "
        f"calibration={len(split.calibration_ids)} calibration_positives={cal_pos} "
        f"test={len(split.test_ids)} fraction={fraction} seed={seed} out={out}"
    )
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    corpus_path = _require_file(_path_setting(args, cfg, "corpus", "--corpus"), "corpus")
    split_path = _require_file(_path_setting(args, cfg, "split", "--split"), "split")
    seed = int(_setting(args, cfg, "seed", _default_seed()))
    k_fixed = _setting(args, cfg, "k", None)
    k_grid = _parse_k_grid(_setting(args, cfg, "k_grid", None))

    pairs = corpus.load_corpus(corpus_path)
    split = corpus.load_split(split_path)
    cal_pairs = _select(pairs, split.calibration_ids)
    cal_records = [rec for rec, _ in cal_pairs]

    if k_fixed is not None:
        k = int(k_fixed)
        chosen_by = "config"
    else:
        embeddings = [rec.embedding for rec in cal_records]
        grid = k_grid if k_grid is not None else aleatoric.default_k_grid(len(cal_records))
        k = aleatoric.choose_k(embeddings, grid)
        chosen_by = f"silhouette over {grid}"

    model = aleatoric.fit(cal_records, k)
    out = Path(_path_setting(args, cfg, "out", "--out"))
    with _atomic(out) as tmp:
        aleatoric.save_cluster_model(model, tmp)

    singletons = model.singleton_clusters()
    print(
        f"cluster: n_calibration={len(cal_records)} k={k} chosen_by=\"{chosen_by}\" "
        f"singleton_clusters={len(singletons)} seed={seed} out={out}"
    )
    if singletons:
        print(f"warning: {len(singletons)} singleton cluster(s) {singletons}; their entropies are weak estimates")
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    corpus_path = _require_file(_path_setting(args, cfg, "corpus", "--corpus"), "corpus")
    split_path = _require_file(_path_setting(args, cfg, "split", "--split"), "split")
    cluster_path = _require_file(
        _path_setting(args, cfg, "cluster_model", "--cluster-model"), "cluster model"
    )
    trees = int(_setting(args, cfg, "trees", 500))
    folds = int(_setting(args, cfg, "folds", 5))
    seed = int(_setting(args, cfg, "seed", _default_seed()))
    strict = bool(_setting(args, cfg, "strict_verbalized", False))
    mode = str(_setting(args, cfg, "calibration_mode", "per_fold"))
    smooth = _setting(args, cfg, "platt_smoothing", True)
    smooth = True if smooth is None else bool(smooth)

    pairs = corpus.load_corpus(corpus_path)
    split = corpus.load_split(split_path)
    model = aleatoric.load_cluster_model(cluster_path)
    cal_pairs = _select(pairs, split.calibration_ids)

    signal_sets, missing_verbalized = _signal_sets(cal_pairs, strict)
    labels = np.array([rec.gold_label for rec, _ in cal_pairs])
    s_alea = []
    for rec, _ in cal_pairs:
        if rec.id not in model.assignments:
            raise SchemaError(f"cluster model does not cover calibration id {rec.id!r}")
        s_alea.append(float(model.entropies[model.assignments[rec.id] - 1]))

    with_alea = np.vstack([
        fusion.build_features(ss, sa, rec.token_len, include_alea=True)
        for ss, sa, (rec, _) in zip(signal_sets, s_alea, cal_pairs)
    ])
    without_alea = np.vstack([
        fusion.build_features(ss, None, rec.token_len, include_alea=False)
        for ss, (rec, _) in zip(signal_sets, cal_pairs)
    ])

    out_dir = Path(_path_setting(args, cfg, "out_dir", "--out-dir"))
    scorers = {
        "hybrid_with_aleatoric": fusion.calibrate_cv(
            with_alea, labels, "hybrid_with_aleatoric", fusion.FEATURES_WITH_ALEATORIC,
            folds=folds, t=trees, seed=seed, mode=mode, smooth_targets=smooth,
        ),
        "hybrid_without_aleatoric": fusion.calibrate_cv(
            without_alea, labels, "hybrid_without_aleatoric", fusion.FEATURES_WITHOUT_ALEATORIC,
            folds=folds, t=trees, seed=seed, mode=mode, smooth_targets=smooth,
        ),
        "verbalized": fusion.calibrate_baseline(
            [ss.s_verb for ss in signal_sets], labels, "verbalized",
            folds=folds, seed=seed, mode=mode, smooth_targets=smooth,
        ),
        "latent": fusion.calibrate_baseline(
            [ss.s_lat for ss in signal_sets], labels, "latent",
            folds=folds, seed=seed, mode=mode, smooth_targets=smooth,
        ),
        "consistency": fusion.calibrate_baseline(
            [ss.s_cons for ss in signal_sets], labels, "consistency",
            folds=folds, seed=seed, mode=mode, smooth_targets=smooth,
        ),
    }
    for name, scorer in scorers.items():
        with _atomic(out_dir / SCORER_FILES[name]) as tmp:
            fusion.save_scorer(scorer, tmp)

    print(
        f"fuse: n_calibration={len(cal_pairs)} trees={trees} folds={folds} mode={mode} "
        f"missing_verbalized={missing_verbalized} seed={seed} out_dir={out_dir}"
    )
    if missing_verbalized and not strict:
        print(f"warning: {missing_verbalized} record(s) had no verbalized score; defaulted to 0.5")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    corpus_path = _require_file(_path_setting(args, cfg, "corpus", "--corpus"), "corpus")
    split_path = _require_file(_path_setting(args, cfg, "split", "--split"), "split")
    cluster_path = _require_file(
        _path_setting(args, cfg, "cluster_model", "--cluster-model"), "cluster model"
    )
    scorer_dir = Path(_path_setting(args, cfg, "scorer_dir", "--scorer-dir"))
    n_bins = int(_setting(args, cfg, "bins", 10))
    strict = bool(_setting(args, cfg, "strict_verbalized", False))
    want_figures = bool(_setting(args, cfg, "figures", True))

    scorers = {}
    for name in METHODS:
        path = _require_file(scorer_dir / SCORER_FILES[name], f"scorer ({name})")
        scorers[name] = fusion.load_scorer(path)

    pairs = corpus.load_corpus(corpus_path)
    split = corpus.load_split(split_path)
    model = aleatoric.load_cluster_model(cluster_path)
    test_pairs = _select(pairs, split.test_ids)
    if not test_pairs:
        raise SchemaError("split has an empty test subset")

    signal_sets, missing_verbalized = _signal_sets(test_pairs, strict)
    golds = np.array([rec.gold_label for rec, _ in test_pairs])
    preds = np.array([raw.pred_label for _, raw in test_pairs])
    s_alea = [aleatoric.assign_uncertainty(rec.embedding, model) for rec, _ in test_pairs]

    with_alea = np.vstack([
        fusion.build_features(ss, sa, rec.token_len, include_alea=True)
        for ss, sa, (rec, _) in zip(signal_sets, s_alea, test_pairs)
    ])
    without_alea = np.vstack([
        fusion.build_features(ss, None, rec.token_len, include_alea=False)
        for ss, (rec, _) in zip(signal_sets, test_pairs)
    ])
    baseline_values = {
        "verbalized": np.array([ss.s_verb for ss in signal_sets]),
        "latent": np.array([ss.s_lat for ss in signal_sets]),
        "consistency": np.array([ss.s_cons for ss in signal_sets]),
    }

    items_by_method: dict[str, list[metrics.EvalItem]] = {}
    confidences: dict[str, np.ndarray] = {}
    for name in METHODS:
        if name in BASELINE_SIGNALS:
            p = scorers[name].predict(baseline_values[name])
            items = [
                metrics.EvalItem(float(pi), int(g), pred_label=int(yh))
                for pi, g, yh in zip(p, golds, preds)
            ]
        else:
            X = with_alea if name == "hybrid_with_aleatoric" else without_alea
            p = scorers[name].predict(X)
            items = [metrics.EvalItem(float(pi), int(g)) for pi, g in zip(p, golds)]
        items_by_method[name] = items
        confidences[name] = p

    reports = {name: metrics.evaluate_method(items_by_method[name], n_bins) for name in METHODS}
    grader_accuracy = float(np.mean(preds == golds))

    report = {
        "n_test": len(test_pairs),
        "n_calibration": len(split.calibration_ids),
        "grader_accuracy": grader_accuracy,
        "config": {
            "bins": n_bins,
            "cluster_k": model.k,
            "strict_verbalized": strict,
            "scorer_seed": scorers["hybrid_with_aleatoric"].seed,
            "scorer_trees": scorers["hybrid_with_aleatoric"].t,
            "scorer_folds": len(scorers["hybrid_with_aleatoric"].folds),
            "calibration_mode": scorers["hybrid_with_aleatoric"].mode,
        },
        "warnings": {
            "missing_verbalized": missing_verbalized,
            "singleton_clusters": model.singleton_clusters(),
        },
        "methods": {name: reports[name].to_dict() for name in METHODS},
    }

    out_dir = Path(_path_setting(args, cfg, "out_dir", "--out-dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    with _atomic(out_dir / "report.json") as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")

    method_dicts = report["methods"]
    with _atomic(out_dir / "curves_roc.csv") as tmp:
        metrics.write_curves_csv(tmp, {m: method_dicts[m]["roc"] for m in METHODS})
    with _atomic(out_dir / "curves_arc.csv") as tmp:
        metrics.write_curves_csv(tmp, {m: method_dicts[m]["arc"] for m in METHODS})
    with _atomic(out_dir / "curves_reliability.csv") as tmp:
        metrics.write_curves_csv(
            tmp,
            {
                m: [
                    (b["mean_confidence"], b["empirical_accuracy"])
                    for b in method_dicts[m]["reliability_bins"]
                    if b["count"]
                ]
                for m in METHODS
            },
        )
    with _atomic(out_dir / "scores.csv") as tmp:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["record_id", "method", "confidence", "gold_label", "decision", "decision_correct"])
            for name in METHODS:
                for (rec, _), item in zip(test_pairs, items_by_method[name]):
                    writer.writerow(
                        [rec.id, name, repr(item.confidence_correct), item.gold_label,
                         item.decision, item.decision_correct]
                    )

    if want_figures:
        figures.render_all(method_dicts, grader_accuracy, out_dir)

    print(
        f"evaluate: n_test={len(test_pairs)} methods={len(METHODS)} bins={n_bins} "
        f"grader_accuracy={grader_accuracy:.6f} missing_verbalized={missing_verbalized} "
        f"seed={scorers['hybrid_with_aleatoric'].seed} out_dir={out_dir}"
    )
    for name in METHODS:
        rep = reports[name]
        print(
            f"method: name={name} auroc={rep.auroc:.6f} auarc={rep.auarc:.6f} "
            f"brier={rep.brier:.6f} ece={rep.ece:.6f} mce={rep.mce:.6f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradeconf",
        description="Hybrid confidence estimation and selective-grading evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)")

    p_split = sub.add_parser("split", help="write a stratified calibration/test split")
    add_common(p_split)
    p_split.add_argument("--corpus", help="interchange JSONL")
    p_split.add_argument("--out", help="split JSON output")
    p_split.add_argument("--calibration-fraction", dest="calibration_fraction", type=float)
    p_split.set_defaults(func=cmd_split)

    p_cluster = sub.add_parser("cluster", help="fit the aleatoric cluster model")
    add_common(p_cluster)
    p_cluster.add_argument("--corpus")
    p_cluster.add_argument("--split")
    p_cluster.add_argument("--out", help="cluster model JSON output")
    p_cluster.add_argument("--k", type=int, help="fixed number of clusters")
    p_cluster.add_argument("--k-grid", dest="k_grid", help="comma-separated K grid for silhouette selection")
    p_cluster.set_defaults(func=cmd_cluster)

    p_fuse = sub.add_parser("fuse", help="train the hybrid scorers and calibrated baselines")
    add_common(p_fuse)
    p_fuse.add_argument("--corpus")
    p_fuse.add_argument("--split")
    p_fuse.add_argument("--cluster-model", dest="cluster_model")
    p_fuse.add_argument("--out-dir", dest="out_dir")
    p_fuse.add_argument("--trees", type=int)
    p_fuse.add_argument("--folds", type=int)
    p_fuse.add_argument("--calibration-mode", dest="calibration_mode", choices=["per_fold", "pooled"])
    p_fuse.add_argument("--platt-smoothing", dest="platt_smoothing", action="store_const", const=True)
    p_fuse.add_argument("--no-platt-smoothing", dest="platt_smoothing", action="store_const", const=False)
    p_fuse.add_argument("--strict-verbalized", dest="strict_verbalized", action="store_const", const=True)
    p_fuse.set_defaults(func=cmd_fuse)

    p_eval = sub.add_parser("evaluate", help="score the test subset and write the report")
    add_common(p_eval)
    p_eval.add_argument("--corpus")
    p_eval.add_argument("--split")
    p_eval.add_argument("--cluster-model", dest="cluster_model")
    p_eval.add_argument("--scorer-dir", dest="scorer_dir")
    p_eval.add_argument("--out-dir", dest="out_dir")
    p_eval.add_argument("--bins", type=int)
    p_eval.add_argument("--strict-verbalized", dest="strict_verbalized", action="store_const", const=True)
    p_eval.add_argument("--figures", dest="figures", action="store_const", const=True)
    p_eval.add_argument("--no-figures", dest="figures", action="store_const", const=False)
    p_eval.set_defaults(func=cmd_evaluate)

    return parser


def _error_kind(exc: Exception) -> str:
    for cls, kind in _ERROR_KINDS:
        if isinstance(exc, cls):
            return kind
    return "argument"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as exc:
        print(f"error: missing-input: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    except (GradeconfError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {_error_kind(exc)}: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing-input: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
