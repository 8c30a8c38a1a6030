"""Model-based confidence signals and the orientation transform.

Three signals are derived from raw LLM grading outputs: the verbalized
self-report, the latent score (softmax over candidate-label log-likelihoods
evaluated at the predicted label), and the consistency score (fraction of
higher-temperature samples agreeing with the greedy decision). Each raw
signal expresses confidence in the model's own decision; ``orient`` maps it
to confidence that the *response is correct* (identity when the prediction
is 1, complement when it is 0) so all downstream scores share one reading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import RawModelOutputs
from .errors import SignalError

# Substituted for a missing verbalized score in lenient mode: maximum
# ignorance, pre-orientation.
LENIENT_VERBALIZED_DEFAULT = 0.5


@dataclass(frozen=True)
class SignalSet:
    """The three oriented confidence signals for one response."""

    s_verb: float
    s_lat: float
    s_cons: float
    pred_label: int


def latent_confidence(label_logliks: Mapping[int, float], pred_label: int) -> float:
    """Softmax over the label log-likelihoods, evaluated at pred_label.

    Numerically stable: the maximum log-likelihood is subtracted before
    exponentiation, so widely separated values cannot overflow.
    """
    if pred_label not in label_logliks:
        raise SignalError(f"pred_label {pred_label} not present in label_logliks")
    for label, ll in label_logliks.items():
        if not math.isfinite(ll):
            raise SignalError(f"log-likelihood for label {label} is not finite: {ll}")
    peak = max(label_logliks.values())
    weights = {label: math.exp(ll - peak) for label, ll in label_logliks.items()}
    return weights[pred_label] / sum(weights.values())


def consistency_confidence(sampled_labels: Sequence[int], pred_label: int) -> float:
    """Fraction of sampled labels that agree with the greedy decision."""
    if len(sampled_labels) == 0:
        raise SignalError("sampled_labels is empty")
    agree = sum(1 for lab in sampled_labels if lab == pred_label)
    return agree / len(sampled_labels)


def orient(raw_score: float, pred_label: int) -> float:
    """Map a raw signal to confidence that the response is correct."""
    if not 0.0 <= raw_score <= 1.0:
        raise SignalError(f"raw score {raw_score} outside [0, 1]")
    if pred_label == 1:
        return raw_score
    return 1.0 - raw_score


def build_signal_set(raw: RawModelOutputs, strict: bool = False) -> SignalSet:
    """Compute the three oriented signals for one response.

    A missing verbalized score raises SignalError in strict mode; otherwise
    it falls back to 0.5 pre-orientation (callers count these substitutions
    for the run summary).
    """
    verbalized = raw.verbalized
    if verbalized is None:
        if strict:
            raise SignalError(f"record {raw.record_id!r} has no verbalized score")
        verbalized = LENIENT_VERBALIZED_DEFAULT
    pred = raw.pred_label
    return SignalSet(
        s_verb=orient(verbalized, pred),
        s_lat=orient(latent_confidence(raw.label_logliks, pred), pred),
        s_cons=orient(consistency_confidence(raw.sampled_labels, pred), pred),
        pred_label=pred,
    )
