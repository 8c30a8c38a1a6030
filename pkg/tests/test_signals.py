import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradeconf.errors import SignalError
from gradeconf.signals import (
    build_signal_set,
    consistency_confidence,
    latent_confidence,
    orient,
)

from conftest import assert_close, make_pair

# exp(-0.1) / (exp(-0.1) + exp(-2.4)), evaluated at 50 digits and frozen
LATENT_EXPECTED = 0.90887703898514386466


class TestLatentConfidence:
    def test_direct_evaluation(self):
        assert_close(latent_confidence({1: -0.1, 0: -2.4}, 1), LATENT_EXPECTED)

    def test_equal_likelihoods(self):
        assert latent_confidence({1: -1.0, 0: -1.0}, 0) == 0.5

    def test_saturated_no_overflow(self):
        assert_close(latent_confidence({1: -0.1, 0: -700.0}, 1), 1.0)

    def test_large_positive_values_stable(self):
        assert_close(latent_confidence({1: 900.0, 0: 897.7}, 1), LATENT_EXPECTED)

    def test_non_finite_rejected(self):
        with pytest.raises(SignalError):
            latent_confidence({1: float("nan"), 0: -1.0}, 1)
        with pytest.raises(SignalError):
            latent_confidence({1: float("-inf"), 0: -1.0}, 0)

    def test_missing_pred_label(self):
        with pytest.raises(SignalError):
            latent_confidence({0: -1.0}, 1)

    @settings(max_examples=300, deadline=None)
    @given(
        ll0=st.floats(-60, 0),
        ll1=st.floats(-60, 0),
        shift=st.floats(-100, 100),
        pred=st.sampled_from([0, 1]),
    )
    def test_shift_invariance(self, ll0, ll1, shift, pred):
        base = latent_confidence({0: ll0, 1: ll1}, pred)
        shifted = latent_confidence({0: ll0 + shift, 1: ll1 + shift}, pred)
        assert abs(base - shifted) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(ll0=st.floats(-60, 0), ll1=st.floats(-60, 0))
    def test_sums_to_one_over_labels(self, ll0, ll1):
        logliks = {0: ll0, 1: ll1}
        total = latent_confidence(logliks, 0) + latent_confidence(logliks, 1)
        assert abs(total - 1.0) <= 1e-12


class TestConsistencyConfidence:
    def test_four_of_five(self):
        assert consistency_confidence([1, 1, 1, 0, 1], 1) == 0.8

    def test_unanimous(self):
        assert consistency_confidence([0, 0, 0, 0, 0], 0) == 1.0

    def test_two_of_five(self):
        assert consistency_confidence([1, 0, 1, 0, 1], 0) == 0.4

    def test_empty_rejected(self):
        with pytest.raises(SignalError):
            consistency_confidence([], 1)

    @settings(max_examples=300, deadline=None)
    @given(labels=st.lists(st.sampled_from([0, 1]), min_size=1, max_size=40))
    def test_complement_identity(self, labels):
        total = consistency_confidence(labels, 1) + consistency_confidence(labels, 0)
        assert abs(total - 1.0) <= 1e-12


class TestOrient:
    def test_identity_branch(self):
        assert orient(0.8, 1) == 0.8

    def test_complement_branch(self):
        assert_close(orient(0.8, 0), 0.2, tol=1e-15)

    def test_fixed_point(self):
        assert orient(0.5, 0) == 0.5

    def test_out_of_range_rejected(self):
        with pytest.raises(SignalError):
            orient(1.2, 1)
        with pytest.raises(SignalError):
            orient(-0.1, 0)

    @settings(max_examples=500, deadline=None)
    @given(s=st.floats(0, 1))
    def test_involution(self, s):
        assert abs(orient(orient(s, 0), 0) - s) <= 1e-15


class TestBuildSignalSet:
    def test_composition_positive_prediction(self):
        _, raw = make_pair(verbalized=0.9, pred_label=1)
        ss = build_signal_set(raw)
        assert ss.s_verb == 0.9
        assert_close(ss.s_lat, 0.90887703898514386466)
        assert ss.s_cons == 0.8
        assert ss.pred_label == 1

    def test_composition_negative_prediction(self):
        # flipping the prediction complements the verbalized channel only:
        # the latent and consistency raws are themselves prediction-dependent,
        # so composing with orient lands back on P(correct)
        _, raw = make_pair(verbalized=0.9, pred_label=0)
        ss = build_signal_set(raw)
        assert_close(ss.s_verb, 0.1, tol=1e-15)
        assert_close(ss.s_lat, LATENT_EXPECTED)
        assert_close(ss.s_cons, 0.8, tol=1e-15)
        assert ss.pred_label == 0

    def test_lenient_default_for_missing_verbalized(self):
        _, raw = make_pair(verbalized=None, pred_label=1)
        assert build_signal_set(raw).s_verb == 0.5

    def test_strict_mode_raises(self):
        _, raw = make_pair(verbalized=None)
        with pytest.raises(SignalError, match="verbalized"):
            build_signal_set(raw, strict=True)

    @settings(max_examples=300, deadline=None)
    @given(
        verbalized=st.one_of(st.none(), st.floats(0, 1)),
        ll0=st.floats(-60, 0),
        ll1=st.floats(-60, 0),
        samples=st.lists(st.sampled_from([0, 1]), min_size=1, max_size=11),
        pred=st.sampled_from([0, 1]),
    )
    def test_outputs_in_unit_interval(self, verbalized, ll0, ll1, samples, pred):
        _, raw = make_pair(
            verbalized=verbalized,
            label_logliks={0: ll0, 1: ll1},
            sampled_labels=samples,
            pred_label=pred,
        )
        ss = build_signal_set(raw)
        for value in (ss.s_verb, ss.s_lat, ss.s_cons):
            assert 0.0 <= value <= 1.0
