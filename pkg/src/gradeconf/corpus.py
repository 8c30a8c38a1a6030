"""Data model, JSONL interchange format, and stratified splitting.

A corpus is a sequence of (ResponseRecord, RawModelOutputs) pairs, one per
student response. The interchange format is JSON Lines with one object per
response; see ``load_corpus`` for the field list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusParseError, SchemaError, StratificationError

LABELS = (0, 1)

# Verbalized scores slightly outside [0,1] (float formatting noise) are
# clamped; anything further out is rejected as semantic garbage.
VERBALIZED_TOLERANCE = 0.01


@dataclass(frozen=True)
class ResponseRecord:
    """One student answer with its gold label and embedding."""

    id: str
    question_id: str
    text: str
    gold_label: int
    token_len: int
    embedding: tuple[float, ...]


@dataclass(frozen=True)
class RawModelOutputs:
    """Per-response LLM grading evidence.

    ``pred_label`` is the greedy grading decision, ``verbalized`` the
    self-reported confidence (None when the extractor could not parse one),
    ``label_logliks`` maps each candidate label to its log-likelihood, and
    ``sampled_labels`` holds the higher-temperature sampled decisions.
    """

    record_id: str
    pred_label: int
    verbalized: float | None
    label_logliks: dict[int, float]
    sampled_labels: tuple[int, ...]


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint calibration/test partition of a corpus by record id."""

    calibration_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int


def token_length(text: str) -> int:
    """Count maximal whitespace-delimited substrings of ``text``."""
    return len(text.split())


def _require(obj: dict, key: str, line_no: int):
    if key not in obj:
        raise CorpusParseError(line_no, f"missing required field {key!r}")
    return obj[key]


def _as_binary(value, field: str, line_no: int) -> int:
    if isinstance(value, bool) or value not in (0, 1):
        raise SchemaError(f"line {line_no}: {field} must be 0 or 1, got {value!r}")
    return int(value)


def _clamp_verbalized(value, line_no: int) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise SchemaError(f"line {line_no}: verbalized must be a finite number")
    if value < -VERBALIZED_TOLERANCE or value > 1.0 + VERBALIZED_TOLERANCE:
        raise SchemaError(
            f"line {line_no}: verbalized {value!r} outside [{-VERBALIZED_TOLERANCE}, {1 + VERBALIZED_TOLERANCE}]"
        )
    return min(1.0, max(0.0, float(value)))


def _parse_line(obj: dict, line_no: int) -> tuple[ResponseRecord, RawModelOutputs]:
    rid = _require(obj, "id", line_no)
    if not isinstance(rid, str) or not rid:
        raise SchemaError(f"line {line_no}: id must be a nonempty string")
    question_id = _require(obj, "question_id", line_no)
    text = _require(obj, "text", line_no)
    if not isinstance(text, str):
        raise CorpusParseError(line_no, "text must be a string")
    gold = _as_binary(_require(obj, "gold_label", line_no), "gold_label", line_no)

    if "embedding" not in obj:
        raise SchemaError(f"line {line_no}: record {rid!r} has no embedding")
    embedding = obj["embedding"]
    if not isinstance(embedding, list) or not embedding:
        raise SchemaError(f"line {line_no}: embedding must be a nonempty list")
    values = []
    for v in embedding:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise SchemaError(f"line {line_no}: embedding holds a non-finite entry")
        values.append(float(v))

    if "token_len" in obj and obj["token_len"] is not None:
        token_len = obj["token_len"]
        if not isinstance(token_len, int) or isinstance(token_len, bool) or token_len < 0:
            raise SchemaError(f"line {line_no}: token_len must be a nonnegative integer")
    else:
        token_len = token_length(text)

    pred = _as_binary(_require(obj, "pred_label", line_no), "pred_label", line_no)

    verbalized = obj.get("verbalized")
    if verbalized is not None:
        verbalized = _clamp_verbalized(verbalized, line_no)

    raw_logliks = _require(obj, "label_logliks", line_no)
    if not isinstance(raw_logliks, dict):
        raise CorpusParseError(line_no, "label_logliks must be an object")
    logliks: dict[int, float] = {}
    for label in LABELS:
        key = str(label)
        if key not in raw_logliks:
            raise SchemaError(f"line {line_no}: label_logliks missing label {key!r}")
        ll = raw_logliks[key]
        if not isinstance(ll, (int, float)) or isinstance(ll, bool) or not math.isfinite(ll):
            raise SchemaError(f"line {line_no}: log-likelihood for label {key!r} is not finite")
        logliks[label] = float(ll)

    sampled = _require(obj, "sampled_labels", line_no)
    if not isinstance(sampled, list) or not sampled:
        raise SchemaError(f"line {line_no}: sampled_labels must be a nonempty list")
    sampled_labels = tuple(_as_binary(v, "sampled_labels entry", line_no) for v in sampled)

    record = ResponseRecord(
        id=rid,
        question_id=str(question_id),
        text=text,
        gold_label=gold,
        token_len=token_len,
        embedding=tuple(values),
    )
    raw = RawModelOutputs(
        record_id=rid,
        pred_label=pred,
        verbalized=verbalized,
        label_logliks=logliks,
        sampled_labels=sampled_labels,
    )
    return record, raw


def load_corpus(path: str | Path) -> list[tuple[ResponseRecord, RawModelOutputs]]:
    """Read an interchange JSONL file into paired records.

    Raises CorpusParseError for malformed lines (with the 1-based line
    number) and SchemaError for duplicate ids, missing embeddings, or an
    embedding dimension mismatch across the corpus.
    """
    pairs: list[tuple[ResponseRecord, RawModelOutputs]] = []
    seen: set[str] = set()
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusParseError(line_no, "record must be a JSON object")
            record, raw = _parse_line(obj, line_no)
            if record.id in seen:
                raise SchemaError(f"line {line_no}: duplicate id {record.id!r}")
            seen.add(record.id)
            if dim is None:
                dim = len(record.embedding)
            elif len(record.embedding) != dim:
                raise SchemaError(
                    f"line {line_no}: embedding dimension {len(record.embedding)} != corpus dimension {dim}"
                )
            pairs.append((record, raw))
    return pairs


def write_corpus(pairs: Iterable[tuple[ResponseRecord, RawModelOutputs]], path: str | Path) -> None:
    """Write paired records as interchange JSONL (inverse of load_corpus)."""
    with open(path, "w", encoding="utf-8") as fh:
        for record, raw in pairs:
            obj = {
                "id": record.id,
                "question_id": record.question_id,
                "text": record.text,
                "gold_label": record.gold_label,
                "token_len": record.token_len,
                "embedding": list(record.embedding),
                "pred_label": raw.pred_label,
                "label_logliks": {str(k): v for k, v in sorted(raw.label_logliks.items())},
                "sampled_labels": list(raw.sampled_labels),
            }
            if raw.verbalized is not None:
                obj["verbalized"] = raw.verbalized
            fh.write(json.dumps(obj) + "\n")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    records: Sequence[ResponseRecord], calibration_fraction: float, seed: int
) -> SplitAssignment:
    """Partition records into calibration/test subsets, stratified by label.

    Per-class calibration counts are round-half-up of fraction x class size;
    if their sum drifts from the rounded overall target, the majority class
    absorbs the +-1 correction. Selection within a class is a seeded shuffle
    of the lexicographically sorted ids, so the result depends only on the
    id/label sets, the fraction, and the seed.
    """
    if not 0.0 < calibration_fraction < 1.0:
        raise ValueError(f"calibration_fraction must be in (0, 1), got {calibration_fraction}")

    by_label: dict[int, list[str]] = {0: [], 1: []}
    for rec in records:
        by_label[rec.gold_label].append(rec.id)
    for label in LABELS:
        if not by_label[label]:
            raise StratificationError(f"corpus has no records with gold_label {label}")

    counts = {label: _round_half_up(calibration_fraction * len(by_label[label])) for label in LABELS}
    target_total = _round_half_up(calibration_fraction * len(records))
    drift = sum(counts.values()) - target_total
    if drift != 0:
        # majority class absorbs the correction; ties resolve to label 0
        majority = max(LABELS, key=lambda lab: (len(by_label[lab]), -lab))
        adjusted = counts[majority] - drift
        if 1 <= adjusted <= len(by_label[majority]):
            counts[majority] = adjusted
        else:
            minority = 1 - majority
            counts[minority] -= drift
    for label in LABELS:
        if counts[label] < 1:
            raise StratificationError(
                f"class {label} would receive {counts[label]} calibration records; "
                "increase calibration_fraction"
            )
        if counts[label] > len(by_label[label]):
            raise StratificationError(
                f"class {label} has only {len(by_label[label])} records, "
                f"cannot place {counts[label]} in calibration"
            )

    rng = np.random.default_rng(seed)
    calibration: set[str] = set()
    for label in LABELS:
        ids = sorted(by_label[label])
        order = rng.permutation(len(ids))
        calibration.update(ids[i] for i in order[: counts[label]])
    test = {rec.id for rec in records} - calibration
    return SplitAssignment(
        calibration_ids=frozenset(calibration), test_ids=frozenset(test), seed=seed
    )


def save_split(split: SplitAssignment, path: str | Path) -> None:
    obj = {
        "seed": split.seed,
        "calibration_ids": sorted(split.calibration_ids),
        "test_ids": sorted(split.test_ids),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_split(path: str | Path) -> SplitAssignment:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    calibration = frozenset(obj["calibration_ids"])
    test = frozenset(obj["test_ids"])
    if calibration & test:
        raise SchemaError("split file: calibration and test ids overlap")
    return SplitAssignment(calibration_ids=calibration, test_ids=test, seed=int(obj["seed"]))
