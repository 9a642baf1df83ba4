"""Command-line entry points.

    lkchaos simulate --config cfg.json --out run1
    lkchaos analyze --in run1.raw --dt 1e-10 --delay 86.7e-9 --report rep.json
    lkchaos sweep --preset fig3a --out fig3a.csv --jobs 2 --base-seed 7
    lkchaos presets --list

`simulate` writes <out>.raw (little-endian float64 intensity) and
<out>.json (sidecar).  `analyze` accepts any conforming raw trace; --dt
and --delay fall back to the trace's sidecar when omitted.  The default
worker count for `sweep` comes from $LKCHAOS_JOBS (else 1).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import traceio
from .analysis import TimeSeries, analyze_all
from .integrator import SimConfig, run_experiment
from .noise import NoiseSpec
from .params import LaserParams
from .sweep import (JOBS_ENV_VAR, SweepPlan, default_jobs, list_presets,
                    preset, run_sweep)

# Reference values measured on a hardware realization of this injection
# scheme (reported alongside simulated metrics for comparison only; no
# assertion in this package checks simulation output against them).
HW_REFERENCE = {
    "note": ("values measured on a hardware realization; for comparison "
             "only"),
    "cp": {"baseline": 0.374, "injected": 0.023},
    "h": {"baseline": 0.983, "injected": 0.999},
    "skewness": {"baseline": 0.529, "injected": 0.011},
}


def _load_run_config(path):
    d = json.loads(Path(path).read_text())
    unknown = set(d) - {"laser", "sim", "noise"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    laser = traceio.laser_from_dict(d.get("laser", {}))
    sim = traceio.sim_from_dict(d.get("sim", {}))
    noise = traceio.noise_from_dict(d.get("noise", {}))
    return laser, sim, noise


def _cmd_simulate(args) -> int:
    laser, sim, noise = _load_run_config(args.config)
    traj, report = run_experiment(laser, noise, sim)
    raw_path, json_path = traceio.write_trace(
        args.out, traj, report, laser, sim, noise)
    print(f"wrote {raw_path} ({traj.intensity.n} samples) and {json_path}")
    print(f"cp={report.cp:.4f} h={report.h:.4f} "
          f"bw80={report.bw80_hz / 1e9:.3f}GHz skew={report.skewness:+.4f} "
          f"clamps={traj.clamp_count}")
    return 0


def _cmd_analyze(args) -> int:
    samples = traceio.read_trace(args.infile)
    dt, delay = args.dt, args.delay
    if dt is None or delay is None:
        sidecar_path = Path(args.infile).with_suffix(".json")
        if not sidecar_path.exists():
            raise SystemExit(
                "--dt and --delay are required when no sidecar exists")
        side = traceio.read_sidecar(sidecar_path)
        if dt is None:
            dt = float(side["dt_sample"])
        if delay is None:
            delay = float(side["diagnostics"]["achieved_delay_s"])
    report = analyze_all(TimeSeries(samples, dt), delay)
    out = report.to_dict()
    out["annotations"] = {"hw_reference": HW_REFERENCE}
    Path(args.report).write_text(traceio.canonical_json(out) + "\n")
    print(f"cp={report.cp:.4f} at {report.peak_lag_s * 1e9:.2f} ns, "
          f"h={report.h:.4f}, bw80={report.bw80_hz / 1e9:.3f} GHz, "
          f"skew={report.skewness:+.4f} -> {args.report}")
    return 0


def _cmd_sweep(args) -> int:
    if args.preset:
        plan = preset(args.preset)
    else:
        plan = SweepPlan.from_dict(json.loads(Path(args.plan).read_text()))
    if args.base_seed is not None:
        plan = SweepPlan.from_dict(
            dict(plan.to_dict(), base_seed=args.base_seed))
    result = run_sweep(plan, out_csv=args.out, jobs=args.jobs,
                       log=lambda m: print(m, file=sys.stderr))
    print(f"{len(result.rows)} rows -> {args.out} "
          f"(baseline BW80 {result.baseline_bw80_hz / 1e9:.3f} GHz)")
    if result.failures:
        print(f"{len(result.failures)} failed points:", file=sys.stderr)
        for f in result.failures:
            print(f"  {f}", file=sys.stderr)
        return 1
    return 0


def _cmd_presets(args) -> int:
    if args.show:
        plan = preset(args.show)
        print(json.dumps(plan.to_dict(), indent=2, sort_keys=True))
        return 0
    for name, desc in list_presets():
        print(f"{name:15s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lkchaos",
        description="Feedback-laser chaos with calibrated noise injection")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment, write a trace")
    p.add_argument("--config", required=True, metavar="JSON",
                   help="run config with laser/sim/noise sections")
    p.add_argument("--out", required=True, metavar="PREFIX",
                   help="output prefix for .raw and .json")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("analyze", help="metrics for an existing raw trace")
    p.add_argument("--in", dest="infile", required=True, metavar="TRACE")
    p.add_argument("--dt", type=float, metavar="S",
                   help="sample interval (default: from sidecar)")
    p.add_argument("--delay", type=float, metavar="S",
                   help="feedback delay (default: from sidecar)")
    p.add_argument("--report", required=True, metavar="JSON")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("sweep", help="run a sweep plan or preset")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", metavar="NAME")
    g.add_argument("--plan", metavar="JSON")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--jobs", type=int, default=default_jobs(),
                   help=f"parallel points (default ${JOBS_ENV_VAR} or 1)")
    p.add_argument("--base-seed", type=int, default=None, metavar="U64")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("presets", help="list or show frozen presets")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--show", metavar="NAME")
    p.set_defaults(fn=_cmd_presets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
