#!/usr/bin/env python3
"""Sweep the bundled parameter windows and report the homoclinic loci.

Runs the same grids as `revshoot scan --config configs/<family>.json` and
prints a per-row summary of the locus curve a*(b).  Output directories
default to out/<family>; pass --jobs to parallelize across rows.
"""

import argparse
import collections
import csv
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from revshoot.config import load_config
from revshoot.scan import LOCUS_NAME, run_scan

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=("sech", "sech2"), action="append",
                    help="which bundled window(s) to scan (default: both)")
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--out", default="out", help="base output directory")
    ap.add_argument("--resume", action="store_true")
    args = ap.parse_args()

    for family in args.family or ("sech", "sech2"):
        cfg = load_config(os.path.join(CONFIG_DIR, f"{family}.json"))
        out_dir = os.path.join(args.out, family)
        manifest = run_scan(
            cfg.nonlinearity, cfg.grid, cfg.shot, out_dir,
            jobs=args.jobs, resume=args.resume,
        )
        print(f"[{family}] {manifest['loci_count']} loci "
              f"in {manifest['wall_time_s']}s -> {out_dir}/{LOCUS_NAME}")

        by_branch = collections.Counter()
        with open(os.path.join(out_dir, LOCUS_NAME)) as fp:
            for row in csv.DictReader(fp):
                by_branch[(int(row["sigma"]), int(row["k"]))] += 1
        for (sigma, k), n in sorted(by_branch.items()):
            print(f"    sigma={sigma:+d} k={k}: {n} points")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
