"""Generate the bundled heart-study-shaped benchmark CSV.

303 rows, 13 mixed-type clinical-style features plus a binary target
(165 positive / 138 negative), no missing values. Class-conditional
feature distributions are calibrated so that the six model families land
in their expected test-AUC bands on a 243/60 split.

Usage: python3 scripts/gen_heart_fixture.py [seed] [out_csv]
"""

from __future__ import annotations

import csv
import sys

import numpy as np

N_POS = 165
N_NEG = 138

# (name, effect size in sd units, mean, sd, integer?)
NUMERIC = [
    ("age", 0.60, 54.0, 9.0, True),
    ("trestbps", 0.35, 131.0, 17.0, True),
    ("chol", 0.30, 246.0, 50.0, True),
    ("thalach", -1.05, 150.0, 22.0, True),
    ("oldpeak", 1.00, 1.05, 1.1, False),
    ("ca", 0.75, 0.7, 1.0, True),
]

# binary 0/1 features: (name, rate_neg, rate_pos)
BINARY = [
    ("sex", 0.45, 0.72),
    ("fbs", 0.14, 0.16),
    ("exang", 0.12, 0.58),
]

# categorical features: (name, levels, probs_neg, probs_pos)
CATEGORICAL = [
    ("cp", ["typical", "atypical", "nonanginal", "asymptomatic"],
     [0.10, 0.25, 0.40, 0.25], [0.25, 0.10, 0.10, 0.55]),
    ("restecg", ["normal", "stt", "hypertrophy"],
     [0.60, 0.05, 0.35], [0.40, 0.05, 0.55]),
    ("slope", ["up", "flat", "down"],
     [0.55, 0.35, 0.10], [0.20, 0.60, 0.20]),
    ("thal", ["normal", "fixed", "reversable"],
     [0.70, 0.07, 0.23], [0.30, 0.07, 0.63]),
]


def generate(seed: int = 7):
    rng = np.random.default_rng(seed)
    y = np.array([1] * N_POS + [0] * N_NEG)
    rng.shuffle(y)
    n = len(y)
    cols: dict = {}
    for name, d, mu, sd, integer in NUMERIC:
        x = mu + sd * (rng.standard_normal(n) + d * (y - y.mean()))
        if name == "oldpeak":
            x = np.clip(x, 0.0, None)
            x = np.round(x, 1)
        if name == "ca":
            x = np.clip(np.round(x), 0, 3).astype(int)
        elif integer:
            x = np.round(x).astype(int)
        cols[name] = x
    for name, r0, r1 in BINARY:
        rate = np.where(y == 1, r1, r0)
        cols[name] = (rng.random(n) < rate).astype(int)
    for name, levels, p0, p1 in CATEGORICAL:
        out = []
        for i in range(n):
            p = p1 if y[i] == 1 else p0
            out.append(levels[rng.choice(len(levels), p=p)])
        cols[name] = out
    order = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
             "thalach", "exang", "oldpeak", "slope", "ca", "thal"]
    return order, cols, y


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 14
    out = sys.argv[2] if len(sys.argv) > 2 else "data/heart_synth.csv"
    order, cols, y = generate(seed)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(order + ["target_var"])
        for i in range(len(y)):
            w.writerow([cols[c][i] for c in order] + [int(y[i])])
    print(f"wrote {out} ({len(y)} rows, {len(order) + 1} columns)")


if __name__ == "__main__":
    main()
