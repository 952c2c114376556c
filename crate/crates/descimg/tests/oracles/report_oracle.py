"""Brute-force evaluation of a score directory against a manifest.

Direct loops over the fusion definitions:

  S_k  sum of the first min(k, n) rows
  H_k  sum of the first min(k, n) one-hot rows
  A_k  rows sorted by the dominant column (largest column mean), descending,
       ties by ordinal; the first min(k, n) of them summed

Argmax ties go to the lowest column. Selected rows are summed in ordinal
order. PerImage judges every row by its own argmax.

    python3 report_oracle.py <manifest.csv> <scores-dir> > expected_report.json
"""

import csv
import json
import sys
from pathlib import Path

KS = [5, 10, 15, 20]
METRICS = [f"{f}{k:02d}" for f in "SHA" for k in KS] + ["PerImage"]


def first_argmax(values):
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def add(acc, row):
    for i in range(len(acc)):
        acc[i] = acc[i] + row[i]


def fused(rows, family, k):
    n = len(rows)
    used = min(k, n)
    c = len(rows[0][1])
    acc = [0.0] * c
    if family == "S":
        for _, scores in rows[:used]:
            add(acc, scores)
    elif family == "H":
        for _, scores in rows[:used]:
            acc[first_argmax(scores)] += 1.0
    else:
        sums = [0.0] * c
        for _, scores in rows:
            add(sums, scores)
        means = [s / n for s in sums]
        d = first_argmax(means)
        ranked = sorted(rows, key=lambda r: (-r[1][d], r[0]))
        for _, scores in sorted(ranked[:used], key=lambda r: r[0]):
            add(acc, scores)
    return first_argmax(acc)


def main(manifest_path, scores_dir):
    with open(manifest_path, newline="") as f:
        records = [r for r in csv.DictReader(f) if r["split"] == "test"]
    labels = None
    confusion = {}
    for rec in sorted(records, key=lambda r: r["site_id"]):
        doc = json.loads((Path(scores_dir) / f"{rec['site_id']}.json").read_text())
        if labels is None:
            labels = doc["labels"]
            confusion = {m: [[0] * len(labels) for _ in labels] for m in METRICS}
        rows = sorted(((r["ordinal"], r["scores"]) for r in doc["rows"]), key=lambda r: r[0])
        truth = labels.index(rec["label"])
        for family in "SHA":
            for k in KS:
                confusion[f"{family}{k:02d}"][truth][fused(rows, family, k)] += 1
        for _, scores in rows:
            confusion["PerImage"][truth][first_argmax(scores)] += 1

    out = {"labels": labels, "metrics": {}}
    best = None
    for m in METRICS:
        cm = confusion[m]
        correct = sum(cm[i][i] for i in range(len(cm)))
        total = sum(map(sum, cm))
        acc = correct / total
        out["metrics"][m] = {"correct": correct, "total": total, "accuracy": acc, "confusion": cm}
        if best is None or acc > best[1]:
            best = (m, acc)
    out["best"] = {"metric": best[0], "accuracy": best[1]}
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
