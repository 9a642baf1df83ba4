"""Trace persistence and config (de)serialization.

A trace is two files sharing a prefix: ``<prefix>.raw`` holds the
decimated intensity as little-endian float64, ``<prefix>.json`` is the
sidecar (grid, config, seeds, diagnostics, metrics).  Sidecars never
contain wall-clock times, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .analysis import AnalysisReport
from .integrator import SimConfig, Trajectory
from .noise import NoiseSpec
from .params import LaserParams

TRACE_DTYPE = "<f8"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def to_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    if isinstance(cfg, NoiseSpec):
        d["scales"] = list(cfg.scales)
    return d


def _from_dict(cls, d: dict, what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValueError(f"unknown {what} fields: {sorted(unknown)}")
    if cls is NoiseSpec and "scales" in d:
        d = dict(d, scales=tuple(d["scales"]))
    return cls(**d)


def laser_from_dict(d: dict) -> LaserParams:
    return _from_dict(LaserParams, d, "laser")


def sim_from_dict(d: dict) -> SimConfig:
    return _from_dict(SimConfig, d, "sim")


def noise_from_dict(d: dict) -> NoiseSpec:
    return _from_dict(NoiseSpec, d, "noise")


def config_sha(laser: LaserParams, sim: SimConfig, noise: NoiseSpec) -> str:
    blob = canonical_json({"laser": to_dict(laser), "sim": to_dict(sim),
                           "noise": to_dict(noise)})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_trace(prefix, traj: Trajectory, report: AnalysisReport,
                laser: LaserParams, sim: SimConfig, noise: NoiseSpec):
    """Write <prefix>.raw and <prefix>.json; returns the two paths."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    raw_path = prefix.with_suffix(".raw")
    json_path = prefix.with_suffix(".json")
    samples = np.ascontiguousarray(traj.intensity.samples, dtype=TRACE_DTYPE)
    raw_path.write_bytes(samples.tobytes())
    sidecar = {
        "format": "raw little-endian float64",
        "n": int(samples.shape[0]),
        "dt_sample": traj.intensity.dt_sample,
        "diagnostics": {
            "clamp_count": traj.clamp_count,
            "achieved_delay_s": traj.achieved_delay_s,
        },
        "config_sha": config_sha(laser, sim, noise),
        "laser": to_dict(laser),
        "sim": to_dict(sim),
        "noise": to_dict(noise),
        "report": report.to_dict(),
    }
    json_path.write_text(canonical_json(sidecar) + "\n")
    return raw_path, json_path


def read_trace(path) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), dtype=TRACE_DTYPE).copy()


def read_sidecar(path) -> dict:
    return json.loads(Path(path).read_text())
