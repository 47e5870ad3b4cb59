#!/usr/bin/env python3
"""Render outcome snapshots on either side of the honeycomb transition.

Below the threshold (g = 0.74) a typical configuration contains a cluster
threading the whole system; just above it (g = 0.78) merged loops stay
small. Writes SVG files under results/snapshots/.
"""

import argparse
import sys

from ghzloops.cli import RunConfig, cmd_snapshot


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/snapshots")
    ap.add_argument("--L", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    for g in (0.74, 0.78, 1.0):
        cfg = RunConfig(
            kind="honeycomb",
            L=args.L,
            g=g,
            burn_in_sweeps=2000,
            seed=args.seed,
            out_dir=args.out,
            start="cold-keep" if g == 1.0 else "hot",
        )
        rc = cmd_snapshot(cfg)
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
