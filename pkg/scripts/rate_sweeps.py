"""Empirical rates on the small fixture: final gap versus K (sigma = 0) and versus T (sigma = 0.5)."""

import argparse
import math
from dataclasses import replace
from pathlib import Path

from nsdecopt.config import load_config
from nsdecopt.harness import SWEEP_COLUMNS, rows_to_csv, sweep

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    args = ap.parse_args()

    base = load_config(ROOT / "configs" / "small.json")
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    k_rows = sweep(base, "K", [10, 20, 40, 80, 160, 320], repeats=1, workers=args.workers)
    noisy = replace(base, algorithm=replace(base.algorithm, K=50, sigma=0.5))
    t_rows = sweep(noisy, "T", [5, 10, 20, 40, 80], repeats=args.repeats, workers=args.workers)
    (out / "sweep_K.csv").write_text(rows_to_csv(SWEEP_COLUMNS, k_rows))
    (out / "sweep_T.csv").write_text(rows_to_csv(SWEEP_COLUMNS, t_rows))

    print("K sweep (sigma = 0, T = 50): local slope of log gap vs log K")
    prev = None
    for row in k_rows:
        slope = "" if prev is None else f"{math.log(row['mean_gap'] / prev['mean_gap']) / math.log(row['value'] / prev['value']):+.2f}"
        print(f"  K={row['value']:<4} gap={row['mean_gap']:.4e} {slope}")
        prev = row
    print(f"T sweep (sigma = 0.5, K = 50, {args.repeats} seeds)")
    for row in t_rows:
        print(f"  T={row['value']:<3} gap={row['mean_gap']:.5f} +- {row['stderr_gap']:.5f}")


if __name__ == "__main__":
    main()
