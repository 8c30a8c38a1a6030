import math

import numpy as np
import pytest

from gradeconf.corpus import RawModelOutputs, ResponseRecord, write_corpus


def make_pair(
    rid="r1",
    question_id="q1",
    text="the moon orbits earth",
    gold_label=1,
    token_len=None,
    embedding=(0.1, 0.2, 0.3, 0.4),
    pred_label=1,
    verbalized=0.9,
    label_logliks=None,
    sampled_labels=(1, 1, 1, 0, 1),
):
    if label_logliks is None:
        label_logliks = {0: -2.4, 1: -0.1}
    record = ResponseRecord(
        id=rid,
        question_id=question_id,
        text=text,
        gold_label=gold_label,
        token_len=len(text.split()) if token_len is None else token_len,
        embedding=tuple(float(v) for v in embedding),
    )
    raw = RawModelOutputs(
        record_id=rid,
        pred_label=pred_label,
        verbalized=verbalized,
        label_logliks=dict(label_logliks),
        sampled_labels=tuple(sampled_labels),
    )
    return record, raw


def make_corpus(n, n_pos, dim=4, seed=0):
    """Synthetic corpus with n records, the first n_pos labeled positive."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        gold = 1 if i < n_pos else 0
        pairs.append(
            make_pair(
                rid=f"r{i:05d}",
                question_id=f"q{i % 7}",
                gold_label=gold,
                embedding=rng.normal(size=dim),
                pred_label=gold if rng.random() < 0.8 else 1 - gold,
                verbalized=round(float(rng.uniform(0.3, 1.0)), 4),
            )
        )
    return pairs


@pytest.fixture
def corpus_file(tmp_path):
    def _write(pairs, name="corpus.jsonl"):
        path = tmp_path / name
        write_corpus(pairs, path)
        return path

    return _write


def assert_close(actual, expected, tol=1e-12):
    assert math.isfinite(actual)
    assert abs(actual - expected) <= tol, f"{actual} != {expected} (tol {tol})"
