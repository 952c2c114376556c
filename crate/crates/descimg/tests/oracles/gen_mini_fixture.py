"""Writes the mini fixture: 12 test-split sites, 4 classes, 20 score rows each.

Rows are Dirichlet(1) draws whose largest value goes to the true class with
probability P, otherwise to a uniformly chosen other class. Uses only the
standard library so the output is reproducible from the seed alone.

    python3 gen_mini_fixture.py ../fixtures/mini
"""

import json
import random
import sys
from pathlib import Path

LABELS = ["machinery", "music", "sport", "tourism"]
SITES = 12
IMAGES = 20
P = 0.45
SEED = 20240531


def row(rng, truth):
    c = len(LABELS)
    winner = truth if rng.random() < P else rng.choice([k for k in range(c) if k != truth])
    draws = sorted((rng.gammavariate(1.0, 1.0) for _ in range(c)), reverse=True)
    total = sum(draws)
    others = [k for k in range(c) if k != winner]
    rng.shuffle(others)
    out = [0.0] * c
    for cls, v in zip([winner] + others, draws):
        out[cls] = v / total
    return out


def main(out):
    out = Path(out)
    (out / "scores").mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    lines = ["site_id,url,label,split,language,screenshot_path,text_path"]
    for i in range(SITES):
        site = f"mini_{i + 1:02d}"
        truth = i % len(LABELS)
        lines.append(f"{site},http://{site}.example/,{LABELS[truth]},test,,,")
        doc = {
            "site_id": site,
            "labels": LABELS,
            "mode": "softmax",
            "rows": [{"ordinal": o, "scores": row(rng, truth)} for o in range(1, IMAGES + 1)],
        }
        (out / "scores" / f"{site}.json").write_text(json.dumps(doc, indent=2) + "\n")
    (out / "manifest.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
