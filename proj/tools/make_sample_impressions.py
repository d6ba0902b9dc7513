#!/usr/bin/env python3
"""Writes the bundled sample impression log (deterministic)."""

import argparse
import csv

import numpy as np

SLOTS = [(300, 250), (728, 90), (160, 600), (336, 280), (468, 60), (950, 90), (1000, 90)]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20130606)
    ap.add_argument("--out", default="data/sample_impressions.csv")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["paying_price", "bidding_price", "slot_width", "slot_height", "slot_visibility"])
        for _ in range(args.rows):
            width, height = SLOTS[rng.integers(len(SLOTS))]
            visibility = int(rng.choice([0, 1, 2, 255], p=[0.45, 0.3, 0.2, 0.05]))
            area = width * height / 1e5
            price = np.exp(rng.normal(np.log(5.0) + 0.15 * area + (0.2 if visibility == 1 else 0.0), 0.45))
            price = float(np.clip(price, 1.0, 20.0))
            bid = price * float(rng.uniform(1.05, 2.0))
            w.writerow([f"{price:.2f}", f"{bid:.2f}", width, height, visibility])


if __name__ == "__main__":
    main()
