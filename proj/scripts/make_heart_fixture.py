#!/usr/bin/env python3
"""Generate the bundled heart-disease-style binary classification fixture.

Synthetic surrogate statistically matched to the public Heart Failure
dataset (918 rows, same columns and marginal shapes). Deterministic:
rerunning this script reproduces data/heart.csv byte for byte.
"""
import csv
import math
import pathlib
import random

N = 918
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "heart.csv"

rng = random.Random(20240817)


def clipped_normal(mu, sd, lo, hi):
    return max(lo, min(hi, rng.gauss(mu, sd)))


def pick(pairs):
    r = rng.random()
    acc = 0.0
    for value, p in pairs:
        acc += p
        if r < acc:
            return value
    return pairs[-1][0]


rows = []
for _ in range(N):
    age = round(clipped_normal(53.5, 9.4, 28, 77))
    sex = pick([("M", 0.79), ("F", 0.21)])
    cp = pick([("ASY", 0.54), ("NAP", 0.22), ("ATA", 0.19), ("TA", 0.05)])
    resting_bp = round(clipped_normal(132, 18, 90, 200))
    chol = 0 if rng.random() < 0.18 else round(clipped_normal(244, 59, 85, 603))
    fasting_bs = 1 if rng.random() < 0.23 else 0
    ecg = pick([("Normal", 0.60), ("LVH", 0.205), ("ST", 0.195)])
    max_hr = round(clipped_normal(136.8, 25.5, 60, 202))
    angina = pick([("Y", 0.40), ("N", 0.60)])
    oldpeak = round(max(0.0, clipped_normal(0.9, 1.07, -0.5, 6.2)), 1)
    slope = pick([("Flat", 0.50), ("Up", 0.43), ("Down", 0.07)])

    z = (
        0.035 * (age - 53)
        + 0.9 * (sex == "M")
        + 1.4 * (cp == "ASY")
        - 0.6 * (cp == "ATA")
        + 0.012 * (130 - max_hr)
        + 1.1 * (angina == "Y")
        + 0.65 * oldpeak
        + 1.3 * (slope == "Flat")
        + 1.7 * (slope == "Down")
        - 0.9 * (slope == "Up")
        + 0.55 * fasting_bs
        - 2.05
    )
    p = 1.0 / (1.0 + math.exp(-2.4 * z))
    heart_disease = 1 if rng.random() < p else 0
    rows.append([age, sex, cp, resting_bp, chol, fasting_bs, ecg, max_hr, angina,
                 oldpeak, slope, heart_disease])

OUT.parent.mkdir(parents=True, exist_ok=True)
with OUT.open("w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["Age", "Sex", "ChestPainType", "RestingBP", "Cholesterol", "FastingBS",
                "RestingECG", "MaxHR", "ExerciseAngina", "Oldpeak", "ST_Slope",
                "HeartDisease"])
    w.writerows(rows)

positives = sum(r[-1] for r in rows)
print(f"wrote {OUT} ({N} rows, {positives} positive / {N - positives} negative)")
