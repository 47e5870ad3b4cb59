#!/usr/bin/env python3
"""Reproduce the four percolation-threshold estimates.

Runs the |g|<1 scans on both lattices and the two |g|>1 bound modes,
then prints the measured transitions next to the published values.
Writes scan CSV/JSON/SVG plus threshold reports under results/.

About 20-40 minutes on two cores with the default statistics.
"""

import argparse
import sys
from pathlib import Path

from ghzloops.cli import RunConfig, cmd_threshold

CASES = [
    # (tag, kind, qc_mode, g_min, g_max, chains, burn, reference value)
    ("honeycomb-sub", "honeycomb", "lower", 0.74, 0.78, 1, 1500, "0.760(2)"),
    ("square-sub", "square", "lower", 0.615, 0.655, 1, 1500, "0.635(3)"),
    ("honeycomb-super-upper", "honeycomb", "upper", 1.16, 1.26, 1, 1500, "1.205(5)"),
    ("honeycomb-super-lower", "honeycomb", "lower", 1.35, 1.43, 4, 2000, "1.390(2)"),
    ("square-super-upper", "square", "upper", 1.26, 1.36, 1, 1500, "1.31(1)"),
    ("square-super-lower", "square", "lower", 1.78, 1.87, 4, 2500, "1.82(1)"),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--samples", type=int, default=2400)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--only", help="run a single case tag")
    args = ap.parse_args()

    for tag, kind, qc, g_min, g_max, chains, burn, ref in CASES:
        if args.only and args.only != tag:
            continue
        print(f"== {tag} (reference {ref}) ==")
        cfg = RunConfig(
            kind=kind,
            qc_mode=qc,
            g_min=g_min,
            g_max=g_max,
            steps=9,
            sizes=(16, 24, 32),
            n_samples=max(args.samples // chains, 600),
            n_chains=chains,
            burn_in_sweeps=burn,
            thinning_sweeps=4,
            seed=args.seed,
            workers=args.workers,
            out_dir=str(Path(args.out) / tag),
        )
        rc = cmd_threshold(cfg)
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
