#!/usr/bin/env python3
"""Run the appraiser-noise sweep and write the reward/rate CSVs.

Defaults to a coarse variance step so a full run (single- and two-item
mechanisms, both distribution families) finishes in minutes; pass
``--step 0.001`` for the fine-grained long-running mode.

Usage:
    python scripts/run_noise_sweep.py --out-dir results/ [--step 0.05]
        [--families normal lognormal] [--max-variance 0.6]
"""

import argparse
import pathlib

from acquimech import SweepConfig, run_sweep, write_sweep_csv

GRID7 = tuple(i / 6 for i in range(7))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--max-variance", type=float, default=0.6)
    ap.add_argument("--families", nargs="+", default=["normal", "lognormal"])
    ap.add_argument("--items", type=int, default=2)
    args = ap.parse_args()

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = int(round(args.max_variance / args.step))
    variances = tuple(round(i * args.step, 10) for i in range(steps + 1))

    for family in args.families:
        config = SweepConfig(
            family=family, prior_mean=0.3, prior_sd=0.25,
            variance_grid=variances, values=GRID7, scores=GRID7, bar=0.25,
            mechanisms=("SOM", "TMM", "OM1", "kxOM1", "UM_TMM", "UMOPT", "OMk"),
            item_count=args.items)
        records = run_sweep(config)
        path = out_dir / f"sweep_{family}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            write_sweep_csv(records, fh)
        print(f"wrote {path} ({len(records)} rows)")


if __name__ == "__main__":
    main()
