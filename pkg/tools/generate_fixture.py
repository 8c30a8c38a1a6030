"""Generate the bundled 300-record synthetic fixture.

Ten well-separated embedding clusters: five "clean" ones whose members
share a gold label and five "ambiguous" ones with coin-flip labels. The
grader errs far more often inside ambiguous clusters, so cluster entropy
carries correctness information none of the model signals hold. Each model
signal is a noisy function of whether the grader was right, and its
precision depends on response length (verbalized is sharp for short
answers, consistency for long ones, latent is uniformly weak), so fusing
the channels requires the length interaction that single-signal baselines
cannot express.

Usage: python3 tools/generate_fixture.py [out.jsonl]
"""

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gradeconf.corpus import RawModelOutputs, ResponseRecord, write_corpus

SEED = 31
N_CLUSTERS = 10
PER_CLUSTER = 30
DIM = 8
N_SAMPLES = 5  # consistency samples per record

P_CORRECT_CLEAN = 0.97
P_CORRECT_AMBIGUOUS = 0.53
CONF_WHEN_RIGHT = 0.80
CONF_WHEN_WRONG = 0.62
STRONG_NOISE = 0.08
WEAK_NOISE = 0.18
LATENT_NOISE = 0.26
SHORT_CUT = 12  # verbalized is sharp below this token count
LONG_CUT = 21  # consistency is sharp at or above this one
MISSING_VERBALIZED_EVERY = 41  # a few records exercise the lenient default

WORDS = (
    "the a cell energy plant water light because it moves heat sound "
    "force mass earth moon sun rock air faster slower absorbs reflects grows"
).split()


def main(out_path: str) -> None:
    rng = np.random.default_rng(SEED)
    centers = rng.normal(scale=6.0, size=(N_CLUSTERS, DIM))
    flat = (CONF_WHEN_RIGHT + CONF_WHEN_WRONG) / 2.0

    pairs = []
    idx = 0
    for c in range(N_CLUSTERS):
        ambiguous = c >= N_CLUSTERS // 2
        clean_label = c % 2
        for _ in range(PER_CLUSTER):
            embedding = centers[c] + rng.normal(scale=0.5, size=DIM)
            gold = int(rng.integers(0, 2)) if ambiguous else clean_label
            p_right = P_CORRECT_AMBIGUOUS if ambiguous else P_CORRECT_CLEAN
            right = rng.random() < p_right
            pred = gold if right else 1 - gold
            base = CONF_WHEN_RIGHT if right else CONF_WHEN_WRONG

            n_words = int(rng.integers(3, 30))
            verb_mu, verb_sd = (base, STRONG_NOISE) if n_words < SHORT_CUT else (flat, WEAK_NOISE)
            cons_mu, cons_sd = (base, STRONG_NOISE) if n_words >= LONG_CUT else (flat, WEAK_NOISE)

            verb = round(float(np.clip(verb_mu + rng.normal(scale=verb_sd), 0.0, 1.0)), 2)

            lat = float(np.clip(base + rng.normal(scale=LATENT_NOISE), 0.02, 0.98))
            shift = float(rng.uniform(-5.0, -1.0))
            if pred == 1:
                logliks = {1: math.log(lat) + shift, 0: math.log(1.0 - lat) + shift}
            else:
                logliks = {1: math.log(1.0 - lat) + shift, 0: math.log(lat) + shift}

            cons = float(np.clip(cons_mu + rng.normal(scale=cons_sd), 0.0, 1.0))
            agree = int(np.clip(round(cons * N_SAMPLES), 0, N_SAMPLES))
            samples = [pred] * agree + [1 - pred] * (N_SAMPLES - agree)
            samples = [int(samples[i]) for i in rng.permutation(N_SAMPLES)]

            text = " ".join(str(WORDS[i]) for i in rng.integers(0, len(WORDS), n_words))

            rid = f"s{idx:04d}"
            record = ResponseRecord(
                id=rid,
                question_id=f"q{c:02d}",
                text=text,
                gold_label=gold,
                token_len=n_words,
                embedding=tuple(round(float(v), 6) for v in embedding),
            )
            raw = RawModelOutputs(
                record_id=rid,
                pred_label=int(pred),
                verbalized=None if idx % MISSING_VERBALIZED_EVERY == 0 else verb,
                label_logliks={k: round(v, 6) for k, v in logliks.items()},
                sampled_labels=tuple(samples),
            )
            pairs.append((record, raw))
            idx += 1

    write_corpus(pairs, out_path)
    n_err = sum(1 for rec, raw in pairs if rec.gold_label != raw.pred_label)
    print(f"wrote {len(pairs)} records to {out_path} (grader errors: {n_err})")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/fixture300.jsonl")
