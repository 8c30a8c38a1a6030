import numpy as np
import pytest

from gradeconf.errors import MetricUndefinedError
from gradeconf.metrics import (
    EvalItem,
    accuracy_at_rejection,
    arc_auarc,
    evaluate_method,
    operating_point,
    reliability,
    roc_auroc,
    roc_auroc_vs_gold,
    write_curves_csv,
)

from conftest import assert_close


def items_from(confidences, correctness):
    """EvalItems whose decision confidence/correctness equal the given arrays.

    Confidence c with correctness 1 maps to p = c (decision 1, gold 1);
    correctness 0 maps to p = c with gold 0 (decision 1, wrong).
    """
    out = []
    for c, ok in zip(confidences, correctness):
        assert c >= 0.5
        out.append(EvalItem(confidence_correct=float(c), gold_label=int(ok)))
    return out


def pairwise_auroc(scores, targets):
    """O(n^2) concordance statistic with 0.5 credit for ties."""
    scores = np.asarray(scores, dtype=float)
    targets = np.asarray(targets, dtype=int)
    pos = scores[targets == 1]
    neg = scores[targets == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestRocAuroc:
    def test_perfect_ranking(self):
        items = items_from([0.9, 0.8, 0.6], [1, 1, 0])
        _, auroc = roc_auroc(items)
        assert auroc == 1.0

    def test_inverted_ranking(self):
        items = items_from([0.6, 0.9], [1, 0])
        _, auroc = roc_auroc(items)
        assert auroc == 0.0

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(0)
        items = []
        for _ in range(200):
            p = float(rng.uniform(0, 1))
            items.append(EvalItem(p, int(rng.integers(0, 2))))
        scores = [it.decision_confidence for it in items]
        targets = [it.decision_correct for it in items]
        _, auroc = roc_auroc(items)
        assert_close(auroc, pairwise_auroc(scores, targets), tol=1e-9)

    def test_ties_get_half_credit(self):
        items = items_from([0.7, 0.7, 0.7, 0.7], [1, 0, 1, 0])
        _, auroc = roc_auroc(items)
        assert auroc == 0.5

    def test_degenerate_rejected(self):
        with pytest.raises(MetricUndefinedError):
            roc_auroc(items_from([0.9, 0.8], [1, 1]))

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        p = rng.uniform(0.5, 1.0, 100)
        ok = rng.integers(0, 2, 100)
        items = items_from(p, ok)
        squeezed = items_from(0.5 + (p - 0.5) ** 3 / 0.25, ok)  # strictly increasing on [0.5, 1]
        assert_close(roc_auroc(items)[1], roc_auroc(squeezed)[1], tol=1e-12)

    def test_permutation_invariance_tie_free(self):
        rng = np.random.default_rng(2)
        p = np.linspace(0.51, 0.99, 60)
        ok = rng.integers(0, 2, 60)
        items = items_from(p, ok)
        perm = rng.permutation(60)
        shuffled = [items[i] for i in perm]
        assert_close(roc_auroc(items)[1], roc_auroc(shuffled)[1], tol=1e-12)

    def test_curve_endpoints(self):
        points, _ = roc_auroc(items_from([0.9, 0.6, 0.7], [1, 0, 1]))
        assert points[0] == (0.0, 0.0)
        assert points[-1] == (1.0, 1.0)


class TestEvalItem:
    def test_threshold_decision(self):
        assert EvalItem(0.7, 1).decision == 1
        assert EvalItem(0.3, 1).decision == 0
        assert EvalItem(0.5, 0).decision == 1  # threshold is >= 0.5

    def test_pred_label_overrides(self):
        assert EvalItem(0.5, 1, pred_label=0).decision == 0
        assert EvalItem(0.2, 1, pred_label=1).decision == 1

    def test_decision_confidence_range(self):
        for p in (0.0, 0.2, 0.5, 0.9, 1.0):
            dc = EvalItem(p, 1).decision_confidence
            assert 0.5 <= dc <= 1.0


class TestArc:
    def test_rejecting_the_sole_error(self):
        items = items_from([0.9, 0.8, 0.6], [1, 1, 0])
        points, _ = arc_auarc(items)
        assert points[0] == (0.0, 2.0 / 3.0)
        assert points[1] == (1.0 / 3.0, 1.0)

    def test_zero_rejection_is_plain_accuracy(self):
        rng = np.random.default_rng(3)
        items = items_from(rng.uniform(0.5, 1, 50), rng.integers(0, 2, 50))
        points, _ = arc_auarc(items)
        expected = np.mean([it.decision_correct for it in items])
        assert points[0][1] == expected

    def test_perfectly_ranked_reaches_one_at_error_rate(self):
        # 10 errors at the lowest confidences out of 50
        conf = np.concatenate([np.linspace(0.5, 0.6, 10), np.linspace(0.7, 0.99, 40)])
        ok = np.concatenate([np.zeros(10, dtype=int), np.ones(40, dtype=int)])
        items = items_from(conf, ok)
        points, _ = arc_auarc(items)
        as_dict = dict(points)
        assert as_dict[10 / 50] == 1.0
        for r, acc in points:
            if r >= 10 / 50:
                assert acc == 1.0

    def test_stable_tie_order(self):
        items = [EvalItem(0.8, 0), EvalItem(0.8, 1)]  # both decide 1; first wrong
        points, _ = arc_auarc(items)
        # the first input is rejected first under stable ascending sort
        assert points[1] == (0.5, 1.0)

    def test_auarc_of_perfect_classifier(self):
        items = items_from([0.9] * 10, [1] * 10)
        _, auarc = arc_auarc(items)
        assert auarc == pytest.approx(0.9, abs=1e-12)  # area over [0, 0.9] at height 1

    def test_permutation_invariance_tie_free(self):
        rng = np.random.default_rng(9)
        conf = np.linspace(0.51, 0.99, 40)
        ok = rng.integers(0, 2, 40)
        items = items_from(conf, ok)
        shuffled = [items[i] for i in rng.permutation(40)]
        assert arc_auarc(items)[0] == arc_auarc(shuffled)[0]


class TestReliability:
    def test_constructed_perfect_calibration(self):
        # dyadic confidences make bin means exact: ECE is exactly 0
        items = [EvalItem(0.75, 1) for _ in range(750)] + [EvalItem(0.75, 0) for _ in range(250)]
        rep = reliability(items, 10)
        assert rep.ece == 0.0

    def test_all_point_seven(self):
        items = [EvalItem(0.7, 1) for _ in range(700)] + [EvalItem(0.7, 0) for _ in range(300)]
        rep = reliability(items, 10)
        assert rep.ece < 1e-12

    def test_maximal_overconfidence(self):
        items = [EvalItem(1.0, 1) for _ in range(50)] + [EvalItem(1.0, 0) for _ in range(50)]
        rep = reliability(items, 10)
        assert rep.brier == 0.5
        assert rep.ece == 0.5
        assert rep.mce == 0.5

    def test_constant_half_brier(self):
        rng = np.random.default_rng(4)
        items = [EvalItem(0.5, int(g)) for g in rng.integers(0, 2, 200)]
        assert reliability(items, 10).brier == 0.25

    def test_bin_counts_sum_to_n(self):
        rng = np.random.default_rng(5)
        items = [EvalItem(float(p), int(g)) for p, g in zip(rng.random(137), rng.integers(0, 2, 137))]
        rep = reliability(items, 10)
        assert sum(b["count"] for b in rep.bins) == 137

    def test_final_bin_right_inclusive(self):
        rep = reliability([EvalItem(1.0, 1)], 10)
        assert rep.bins[-1]["count"] == 1

    def test_ece_at_most_mce(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            n = int(rng.integers(5, 300))
            items = [
                EvalItem(float(p), int(g))
                for p, g in zip(rng.random(n), rng.integers(0, 2, n))
            ]
            rep = reliability(items, int(rng.integers(1, 20)))
            assert rep.ece <= rep.mce + 1e-15
            assert 0.0 <= rep.brier <= 1.0


class TestOperatingPoint:
    def test_enumeration_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(3, 100))
            items = items_from(rng.uniform(0.5, 1, n), rng.integers(0, 2, n))
            try:
                points, _ = arc_auarc(items)
            except MetricUndefinedError:
                continue
            got = operating_point(points)
            best = max(points, key=lambda pt: (pt[1] - pt[0], -pt[0]))
            assert got == best

    def test_perfectly_ranked_tie_goes_to_zero(self):
        # error rate 0.2 perfectly ranked: objective ties at r=0 and r=0.2,
        # smallest rejection wins
        conf = np.concatenate([np.linspace(0.5, 0.6, 10), np.linspace(0.7, 0.99, 40)])
        ok = np.concatenate([np.zeros(10, dtype=int), np.ones(40, dtype=int)])
        points, _ = arc_auarc(items_from(conf, ok))
        assert operating_point(points) == (0.0, 0.8)

    def test_uninformative_confidence(self):
        items = items_from([0.7] * 20, [1] * 15 + [0] * 5)
        points, _ = arc_auarc(items)
        r, _ = operating_point(points)
        assert r == 0.0

    def test_single_item(self):
        points, _ = arc_auarc([EvalItem(0.9, 1)])
        assert operating_point(points) == (0.0, 1.0)


class TestEvaluateMethod:
    def _items(self, n=120, seed=8):
        rng = np.random.default_rng(seed)
        gold = rng.integers(0, 2, n)
        p = np.clip(gold * 0.6 + rng.normal(0.2, 0.25, n), 0.01, 0.99)
        return [EvalItem(float(pi), int(g)) for pi, g in zip(p, gold)]

    def test_report_matches_individual_metrics(self):
        items = self._items()
        report = evaluate_method(items, 10)
        assert report.auroc == roc_auroc(items)[1]
        assert report.auroc_vs_gold == roc_auroc_vs_gold(items)[1]
        assert report.auarc == arc_auarc(items)[1]
        rel = reliability(items, 10)
        assert report.brier == rel.brier
        assert report.ece == rel.ece
        assert report.mce == rel.mce

    def test_no_selection_accuracy_field_present(self):
        report = evaluate_method(self._items(), 10)
        assert report.accuracy == report.accuracy_at_rejection["0.0"]

    def test_rejection_grid_keys(self):
        report = evaluate_method(self._items(), 10)
        assert sorted(report.accuracy_at_rejection) == [f"{v/10:.1f}" for v in range(10)]
        assert "0.4" in report.accuracy_at_rejection

    def test_accuracy_at_rejection_rounding(self):
        points = [(i / 4, float(i)) for i in range(4)]
        assert accuracy_at_rejection(points, 0.0) == 0.0
        assert accuracy_at_rejection(points, 0.5) == 2.0
        assert accuracy_at_rejection(points, 0.9) == 3.0  # capped at n-1

    def test_to_dict_round_trips_through_json(self):
        import json

        report = evaluate_method(self._items(), 10)
        encoded = json.dumps(report.to_dict(), sort_keys=True)
        assert json.loads(encoded)["auroc"] == report.auroc


class TestCurvesCsv:
    def test_columns_and_rows(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, {"m1": [(0.0, 0.5), (1.0, 1.0)], "m2": [(0.5, 0.25)]})
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,y,method"
        assert lines[1] == "0.0,0.5,m1"
        assert lines[3] == "0.5,0.25,m2"
