"""Sweep orchestration: seeded replicas over (bandwidth, QGSR) grids.

Seeds never depend on execution order: replica r of point i draws its
(noise_seed, sim_seed) pair from SeedSequence(base_seed, spawn_key=(i, r)),
so parallel and serial execution, and resumed and fresh sweeps, produce
identical rows.  The noiseless baseline used for the QCBR column has its
own reserved spawn key.
"""

from __future__ import annotations

import dataclasses
import os
import sys
import tempfile
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .integrator import DivergedRunError, SimConfig, run_experiment
from .noise import NoiseSpec
from .params import LaserParams

QGSR_VALUES_DEFAULT = (9.0, 10.5, 12.0, 13.5, 15.0, 16.0)
BANDWIDTH_VALUES_DEFAULT = (100e6, 200e6, 300e6, 400e6, 500e6)
REPLICAS_DEFAULT = 5
_BASELINE_SPAWN_KEY = 1 << 20

CSV_HEADER = ("bandwidth_hz,qgsr_db,qcbr,cp_mean,cp_std,h_mean,h_std,"
              "bw80_hz,skew,seeds,wall_s")

JOBS_ENV_VAR = "LKCHAOS_JOBS"


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV_VAR, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SweepPlan:
    axis: str = "qgsr"  # which variable Fig-style plots put on x: qgsr|qcbr
    qgsr_values: tuple = QGSR_VALUES_DEFAULT
    bandwidth_values: tuple = BANDWIDTH_VALUES_DEFAULT
    replicas: int = REPLICAS_DEFAULT
    base_seed: int = 0
    laser: LaserParams = field(default_factory=LaserParams)
    sim: SimConfig = field(default_factory=SimConfig)
    noise_template: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.axis not in ("qgsr", "qcbr"):
            raise ValueError("axis must be 'qgsr' or 'qcbr'")
        if not self.qgsr_values or not self.bandwidth_values:
            raise ValueError("axes must be non-empty")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    @property
    def points(self):
        """(point_idx, bandwidth, qgsr) in canonical row order."""
        out = []
        i = 0
        for b in self.bandwidth_values:
            for q in self.qgsr_values:
                out.append((i, float(b), float(q)))
                i += 1
        return out

    def to_dict(self) -> dict:
        from .traceio import to_dict
        return {
            "axis": self.axis,
            "qgsr_values": list(self.qgsr_values),
            "bandwidth_values": list(self.bandwidth_values),
            "replicas": self.replicas,
            "base_seed": self.base_seed,
            "laser": to_dict(self.laser),
            "sim": to_dict(self.sim),
            "noise_template": to_dict(self.noise_template),
        }

    @staticmethod
    def from_dict(d: dict) -> "SweepPlan":
        from .traceio import laser_from_dict, noise_from_dict, sim_from_dict
        d = dict(d)
        for key, conv in (("laser", laser_from_dict), ("sim", sim_from_dict),
                          ("noise_template", noise_from_dict)):
            if key in d:
                d[key] = conv(d[key])
        for key in ("qgsr_values", "bandwidth_values"):
            if key in d:
                d[key] = tuple(d[key])
        known = {f.name for f in dataclasses.fields(SweepPlan)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown plan fields: {sorted(unknown)}")
        return SweepPlan(**d)


@dataclass(frozen=True)
class PointRow:
    bandwidth_hz: float
    qgsr_db: float
    qcbr: float
    cp_mean: float
    cp_std: float
    h_mean: float
    h_std: float
    bw80_hz: float
    skew: float
    seeds: str     # "noise/sim" per replica, ';'-joined, '!' marks diverged
    wall_s: float

    def csv_line(self) -> str:
        return ",".join([
            repr(self.bandwidth_hz), repr(self.qgsr_db), repr(self.qcbr),
            repr(self.cp_mean), repr(self.cp_std), repr(self.h_mean),
            repr(self.h_std), repr(self.bw80_hz), repr(self.skew),
            self.seeds, repr(self.wall_s)])


@dataclass
class SweepResult:
    rows: list
    failures: list
    baseline_bw80_hz: float
    baseline_cp: float

    def to_csv(self, path):
        write_rows_csv(path, self.rows, self.baseline_bw80_hz,
                       self.baseline_cp)


def derive_seeds(base_seed: int, point_idx: int, replica: int):
    ss = np.random.SeedSequence(base_seed, spawn_key=(point_idx, replica))
    a, b = ss.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def baseline_seeds(base_seed: int, replica: int):
    ss = np.random.SeedSequence(base_seed,
                                spawn_key=(_BASELINE_SPAWN_KEY, replica))
    a, b = ss.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def run_point(laser: LaserParams, noise_spec: NoiseSpec, sim_cfg: SimConfig,
              seeds, baseline_bw80: float = float("nan")) -> PointRow:
    """One (bandwidth, QGSR) point: a run per (noise_seed, sim_seed) pair.

    A diverged replica is flagged in the seeds column and excluded from
    the aggregates; the remaining replicas are retained.
    """
    import time
    t0 = time.perf_counter()
    cps, hs, bws, sks = [], [], [], []
    tags = []
    for ns, ss in seeds:
        spec_r = replace(noise_spec, seed=int(ns))
        cfg_r = replace(sim_cfg, seed=int(ss))
        try:
            _, rep = run_experiment(laser, spec_r, cfg_r)
        except DivergedRunError:
            tags.append(f"{ns}/{ss}!")
            continue
        tags.append(f"{ns}/{ss}")
        cps.append(rep.cp)
        hs.append(rep.h)
        bws.append(rep.bw80_hz)
        sks.append(rep.skewness)
    if cps:
        agg = (float(np.mean(cps)), float(np.std(cps)), float(np.mean(hs)),
               float(np.std(hs)), float(np.mean(bws)), float(np.mean(sks)))
    else:
        agg = (float("nan"),) * 6
    qcbr = float(noise_spec.bandwidth_hz / baseline_bw80) \
        if baseline_bw80 == baseline_bw80 else float("nan")
    return PointRow(
        bandwidth_hz=float(noise_spec.bandwidth_hz),
        qgsr_db=float(noise_spec.qgsr_db), qcbr=qcbr,
        cp_mean=agg[0], cp_std=agg[1], h_mean=agg[2], h_std=agg[3],
        bw80_hz=agg[4], skew=agg[5], seeds=";".join(tags),
        wall_s=time.perf_counter() - t0)


def run_baseline(laser: LaserParams, sim_cfg: SimConfig, replicas: int,
                 base_seed: int):
    """Noiseless reference runs; returns (mean BW80, mean C_p)."""
    bws, cps = [], []
    off = NoiseSpec(enabled=False)
    for r in range(replicas):
        _, ss = baseline_seeds(base_seed, r)
        _, rep = run_experiment(laser, off, replace(sim_cfg, seed=ss))
        bws.append(rep.bw80_hz)
        cps.append(rep.cp)
    return float(np.mean(bws)), float(np.mean(cps))


def _point_task(args):
    laser, spec, cfg, seeds, baseline = args
    return run_point(laser, spec, cfg, seeds, baseline)


def write_rows_csv(path, rows, baseline_bw80, baseline_cp, plan_sha=""):
    """Atomic write: header comment with the baseline, then ordered rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# baseline_bw80_hz={baseline_bw80!r} baseline_cp="
             f"{baseline_cp!r} plan_sha={plan_sha}", CSV_HEADER]
    lines += [r.csv_line() for r in rows]
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_rows_csv(path):
    """Returns (rows, baseline_bw80, baseline_cp, plan_sha)."""
    rows = []
    base_bw = base_cp = float("nan")
    sha = ""
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == CSV_HEADER:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    k, _, v = tok.partition("=")
                    if k == "baseline_bw80_hz":
                        base_bw = float(v)
                    elif k == "baseline_cp":
                        base_cp = float(v)
                    elif k == "plan_sha":
                        sha = v
                continue
            f = line.split(",")
            rows.append(PointRow(
                bandwidth_hz=float(f[0]), qgsr_db=float(f[1]),
                qcbr=float(f[2]), cp_mean=float(f[3]), cp_std=float(f[4]),
                h_mean=float(f[5]), h_std=float(f[6]), bw80_hz=float(f[7]),
                skew=float(f[8]), seeds=f[9], wall_s=float(f[10])))
    return rows, base_bw, base_cp, sha


def _plan_sha(plan: SweepPlan) -> str:
    import hashlib
    from .traceio import canonical_json
    return hashlib.sha256(canonical_json(plan.to_dict()).encode()) \
        .hexdigest()[:16]


def run_sweep(plan: SweepPlan, out_csv=None, jobs: int | None = None,
              log=None) -> SweepResult:
    """Execute every plan point; persist after each completed point.

    With ``out_csv`` pointing at a partially written sweep of the same
    plan, completed points are loaded instead of recomputed.  ``jobs``
    parallelizes across points (the default comes from $LKCHAOS_JOBS).
    """
    if jobs is None:
        jobs = default_jobs()
    log = log or (lambda msg: None)
    sha = _plan_sha(plan)

    done: dict = {}
    base_bw = base_cp = float("nan")
    if out_csv is not None and Path(out_csv).exists():
        rows0, base_bw, base_cp, sha0 = read_rows_csv(out_csv)
        if sha0 and sha0 != sha:
            raise ValueError(f"{out_csv} holds a different plan "
                             f"(sha {sha0} != {sha})")
        done = {(r.bandwidth_hz, r.qgsr_db): r for r in rows0}
        if done:
            log(f"resuming: {len(done)} of {len(plan.points)} points present")

    if base_bw != base_bw:  # no baseline on record yet
        log(f"baseline: {plan.replicas} noiseless replicas")
        base_bw, base_cp = run_baseline(plan.laser, plan.sim, plan.replicas,
                                        plan.base_seed)
        log(f"baseline BW80 = {base_bw / 1e9:.3f} GHz, C_p = {base_cp:.3f}")

    def persist(rows_by_idx):
        if out_csv is not None:
            ordered = [rows_by_idx[i] for i in sorted(rows_by_idx)]
            write_rows_csv(out_csv, ordered, base_bw, base_cp, sha)

    points = plan.points
    rows_by_idx = {}
    pending = []
    for i, b, q in points:
        key_row = done.get((b, q))
        if key_row is not None:
            rows_by_idx[i] = key_row
            continue
        spec = replace(plan.noise_template, bandwidth_hz=b, qgsr_db=q)
        seeds = [derive_seeds(plan.base_seed, i, r)
                 for r in range(plan.replicas)]
        pending.append((i, (plan.laser, spec, plan.sim, seeds, base_bw)))

    failures = []
    if jobs <= 1 or len(pending) <= 1:
        for i, args in pending:
            b, q = args[1].bandwidth_hz, args[1].qgsr_db
            try:
                rows_by_idx[i] = _point_task(args)
                log(f"point {i}: B={b / 1e6:g} MHz QGSR={q:g} dB -> "
                    f"cp={rows_by_idx[i].cp_mean:.4f}")
            except Exception as e:
                failures.append(f"point {i} (B={b:g}, QGSR={q:g}): {e}")
                log(failures[-1])
            persist(rows_by_idx)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(_point_task, args): (i, args)
                    for i, args in pending}
            while futs:
                ready, _ = wait(futs, return_when=FIRST_COMPLETED)
                for fut in ready:
                    i, args = futs.pop(fut)
                    b, q = args[1].bandwidth_hz, args[1].qgsr_db
                    try:
                        rows_by_idx[i] = fut.result()
                        log(f"point {i}: B={b / 1e6:g} MHz QGSR={q:g} dB")
                    except Exception as e:
                        failures.append(
                            f"point {i} (B={b:g}, QGSR={q:g}): {e}")
                        log(failures[-1])
                persist(rows_by_idx)

    rows = [rows_by_idx[i] for i in sorted(rows_by_idx)]
    return SweepResult(rows=rows, failures=failures,
                       baseline_bw80_hz=base_bw, baseline_cp=base_cp)


# ---------------------------------------------------------------- presets

def _fig2_plan(enabled: bool) -> SweepPlan:
    return SweepPlan(
        axis="qgsr", qgsr_values=(16.0,), bandwidth_values=(100e6,),
        replicas=REPLICAS_DEFAULT,
        noise_template=NoiseSpec(bandwidth_hz=100e6, qgsr_db=16.0,
                                 enabled=enabled))


def _fig3_qgsr_plan() -> SweepPlan:
    return SweepPlan(axis="qgsr", qgsr_values=QGSR_VALUES_DEFAULT,
                     bandwidth_values=BANDWIDTH_VALUES_DEFAULT,
                     replicas=REPLICAS_DEFAULT)


def _fig3_qcbr_plan() -> SweepPlan:
    return SweepPlan(axis="qcbr", qgsr_values=QGSR_VALUES_DEFAULT,
                     bandwidth_values=(50e6,) + BANDWIDTH_VALUES_DEFAULT,
                     replicas=REPLICAS_DEFAULT)


PRESETS = {
    "fig2_baseline": (_fig2_plan, (False,),
                      "noiseless feedback chaos reference (5 replicas)"),
    "fig2_injected": (_fig2_plan, (True,),
                      "100 MHz / 16 dB injection endpoint (5 replicas)"),
    "fig3a": (_fig3_qgsr_plan, (),
              "C_p vs QGSR, five bandwidths 100-500 MHz"),
    "fig3b": (_fig3_qgsr_plan, (),
              "H vs QGSR; same grid as fig3a, entropy view"),
    "fig3c": (_fig3_qcbr_plan, (),
              "C_p vs bandwidth ratio, six bandwidths incl. 50 MHz"),
    "fig3d": (_fig3_qcbr_plan, (),
              "H vs bandwidth ratio; same grid as fig3c"),
}


def preset(name: str) -> SweepPlan:
    try:
        builder, args, _ = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; valid presets: "
            + ", ".join(sorted(PRESETS))) from None
    return builder(*args)


def list_presets():
    return [(name, desc) for name, (_, _, desc) in PRESETS.items()]
