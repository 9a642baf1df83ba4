#!/usr/bin/env python3
"""Run the drive-strength and bandwidth sweeps.

``fig3a``/``fig3b`` share one (bandwidth x QGSR) grid — C_p and H views
of the same rows; ``fig3c``/``fig3d`` add the 50 MHz band and index rows
by the bandwidth ratio QCBR instead.  About 150 (180 for c/d) injected
50-us runs per grid: expect most of an hour per sweep on one core.
Sweeps resume from a partial CSV, so an interrupted run loses at most
one point.

    python scripts/run_fig3.py --preset fig3a --out-dir results/fig3
"""

import argparse
import sys
from pathlib import Path

from lkchaos import preset, run_sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="fig3a",
                    choices=["fig3a", "fig3b", "fig3c", "fig3d"])
    ap.add_argument("--out-dir", default="results/fig3", type=Path)
    ap.add_argument("--jobs", type=int, default=None,
                    help="parallel points (default $LKCHAOS_JOBS or 1); "
                    "each injected point peaks near 3 GB")
    ap.add_argument("--base-seed", type=int, default=None)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    plan = preset(args.preset)
    if args.base_seed is not None:
        from lkchaos import SweepPlan
        plan = SweepPlan.from_dict(dict(plan.to_dict(),
                                        base_seed=args.base_seed))
    out = args.out_dir / f"{args.preset}.csv"
    result = run_sweep(plan, out_csv=out, jobs=args.jobs,
                       log=lambda m: print(m, flush=True))
    print(f"{len(result.rows)} rows -> {out}")
    print(f"baseline: BW80 {result.baseline_bw80_hz / 1e9:.3f} GHz, "
          f"C_p {result.baseline_cp:.4f}")
    if result.failures:
        for f in result.failures:
            print(f"FAILED {f}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
