import dataclasses
import glob
import json

import numpy as np
import pytest

import lkchaos.sweep as sweep_mod
from lkchaos.analysis import AnalysisError, AnalysisReport
from lkchaos.integrator import DivergedRunError, SimConfig
from lkchaos.noise import NoiseSpec
from lkchaos.params import LaserParams
from lkchaos.sweep import (BANDWIDTH_VALUES_DEFAULT, CSV_HEADER,
                           QGSR_VALUES_DEFAULT, PointRow, SweepPlan,
                           _plan_sha, baseline_seeds, default_jobs,
                           derive_seeds, list_presets, preset, read_rows_csv,
                           run_point, run_sweep, write_rows_csv)

# Small enough to run in seconds, long enough for every metric.
TINY = SimConfig(t_total=4.5e-6, t_transient=1e-6)
PLAN = SweepPlan(qgsr_values=(16.0,), bandwidth_values=(100e6, 200e6),
                 replicas=1, base_seed=3, sim=TINY)


def fake_report(cp=0.5, h=0.9, bw=1e9, sk=0.1):
    return AnalysisReport(cp=cp, peak_lag_s=86.7e-9, h=h, bw80_hz=bw,
                          skewness=sk, histogram={})


@pytest.fixture(scope="module")
def serial(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "tiny.csv"
    result = run_sweep(PLAN, out_csv=out, jobs=1)
    return out, result, out.read_bytes()


class TestSeeds:
    def test_deterministic_and_distinct(self):
        assert derive_seeds(0, 3, 1) == derive_seeds(0, 3, 1)
        pairs = {derive_seeds(0, i, r) for i in range(4) for r in range(3)}
        assert len(pairs) == 12
        assert derive_seeds(1, 3, 1) != derive_seeds(0, 3, 1)

    def test_baseline_reserved_key(self):
        b = baseline_seeds(0, 0)
        assert b == baseline_seeds(0, 0)
        assert b not in {derive_seeds(0, i, r)
                         for i in range(40) for r in range(5)}

    def test_default_jobs_env(self, monkeypatch):
        monkeypatch.delenv("LKCHAOS_JOBS", raising=False)
        assert default_jobs() == 1
        monkeypatch.setenv("LKCHAOS_JOBS", "4")
        assert default_jobs() == 4
        monkeypatch.setenv("LKCHAOS_JOBS", "junk")
        assert default_jobs() == 1


class TestPlan:
    def test_points_order_is_bandwidth_major(self):
        plan = SweepPlan(qgsr_values=(1.0, 2.0), bandwidth_values=(1e8, 2e8))
        assert plan.points == [(0, 1e8, 1.0), (1, 1e8, 2.0),
                               (2, 2e8, 1.0), (3, 2e8, 2.0)]

    def test_round_trips_through_dict(self):
        plan = preset("fig3c")
        assert SweepPlan.from_dict(plan.to_dict()) == plan
        assert SweepPlan.from_dict(json.loads(json.dumps(plan.to_dict()))) \
            == plan

    def test_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="unknown plan fields"):
            SweepPlan.from_dict({"axis": "qgsr", "bogus": 1})

    def test_validation(self):
        with pytest.raises(ValueError):
            SweepPlan(axis="nope")
        with pytest.raises(ValueError):
            SweepPlan(qgsr_values=())
        with pytest.raises(ValueError):
            SweepPlan(replicas=0)


class TestPresets:
    def test_catalog(self):
        names = [n for n, _ in list_presets()]
        assert names == ["fig2_baseline", "fig2_injected", "fig3a", "fig3b",
                         "fig3c", "fig3d"]

    def test_fig2_pair(self):
        base = preset("fig2_baseline")
        inj = preset("fig2_injected")
        for plan in (base, inj):
            assert plan.points == [(0, 100e6, 16.0)]
            assert plan.replicas == 5
        assert base.noise_template.enabled is False
        assert inj.noise_template.enabled is True
        assert inj.noise_template.bandwidth_hz == 100e6
        assert inj.noise_template.qgsr_db == 16.0

    def test_fig3_grids(self):
        a = preset("fig3a")
        assert a.axis == "qgsr"
        assert a.qgsr_values == QGSR_VALUES_DEFAULT
        assert a.bandwidth_values == BANDWIDTH_VALUES_DEFAULT
        assert len(a.points) == 30
        assert preset("fig3b") == a
        c = preset("fig3c")
        assert c.axis == "qcbr"
        assert c.bandwidth_values == (50e6,) + BANDWIDTH_VALUES_DEFAULT
        assert preset("fig3d") == c

    def test_unknown_name_lists_choices(self):
        with pytest.raises(ValueError, match="fig2_baseline"):
            preset("fig9z")


class TestRunPointLogic:
    SEEDS = [(11, 21), (12, 22), (13, 23)]

    def test_diverged_replica_flagged_and_excluded(self, monkeypatch):
        def fake(laser, spec, cfg):
            if spec.seed == 12:
                raise DivergedRunError(7, 3.5e-12)
            return None, fake_report(cp=0.01 * spec.seed, h=0.9)

        monkeypatch.setattr(sweep_mod, "run_experiment", fake)
        row = run_point(LaserParams(), NoiseSpec(), TINY, self.SEEDS,
                        baseline_bw80=2e9)
        assert row.seeds == "11/21;12/22!;13/23"
        assert row.cp_mean == pytest.approx(np.mean([0.11, 0.13]))
        assert row.cp_std == pytest.approx(np.std([0.11, 0.13]))
        assert row.qcbr == pytest.approx(100e6 / 2e9)

    def test_all_replicas_diverged_yields_nan_row(self, monkeypatch):
        def fake(laser, spec, cfg):
            raise DivergedRunError(7, 3.5e-12)

        monkeypatch.setattr(sweep_mod, "run_experiment", fake)
        row = run_point(LaserParams(), NoiseSpec(), TINY, self.SEEDS)
        assert row.seeds == "11/21!;12/22!;13/23!"
        assert row.cp_mean != row.cp_mean
        assert row.qcbr != row.qcbr  # no baseline given either

    def test_unexpected_failure_collected_not_raised(self, monkeypatch,
                                                     tmp_path):
        def fake(laser, spec, cfg):
            if spec.enabled:
                raise AnalysisError("power_spectrum: too short")
            return None, fake_report(bw=2e9, cp=0.7)

        monkeypatch.setattr(sweep_mod, "run_experiment", fake)
        out = tmp_path / "fail.csv"
        res = run_sweep(PLAN, out_csv=out, jobs=1)
        assert res.rows == []
        assert len(res.failures) == 2
        assert "power_spectrum" in res.failures[0]
        # the file still holds the baseline for a later resume
        _, bw, cp, sha = read_rows_csv(out)
        assert bw == 2e9 and cp == 0.7 and sha == _plan_sha(PLAN)

    def test_preseeded_baseline_is_reused(self, monkeypatch, tmp_path):
        calls = []

        def fake(laser, spec, cfg):
            calls.append(spec.enabled)
            return None, fake_report(bw=3e9)

        monkeypatch.setattr(sweep_mod, "run_experiment", fake)
        out = tmp_path / "pre.csv"
        write_rows_csv(out, [], 2.5e9, 0.71, _plan_sha(PLAN))
        res = run_sweep(PLAN, out_csv=out, jobs=1)
        assert res.baseline_bw80_hz == 2.5e9
        assert res.baseline_cp == 0.71
        assert all(calls)  # only the enabled point runs, no baseline runs
        assert res.rows[0].qcbr == pytest.approx(100e6 / 2.5e9)


class TestCsvIo:
    ROW = PointRow(bandwidth_hz=1e8, qgsr_db=16.0, qcbr=0.033,
                   cp_mean=0.0302, cp_std=0.0028, h_mean=0.99961,
                   h_std=0.0001, bw80_hz=8.8e7, skew=0.41,
                   seeds="5/6;7/8!", wall_s=1.5)

    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.csv"
        write_rows_csv(path, [self.ROW], 3.028e9, 0.6986, "abc123")
        rows, bw, cp, sha = read_rows_csv(path)
        assert (bw, cp, sha) == (3.028e9, 0.6986, "abc123")
        assert rows == [self.ROW]
        text = path.read_text().splitlines()
        assert text[0].startswith("# baseline_bw80_hz=")
        assert text[1] == CSV_HEADER
        assert text[2] == self.ROW.csv_line()

    def test_no_temp_files_left(self, tmp_path):
        write_rows_csv(tmp_path / "y.csv", [self.ROW], 1.0, 1.0)
        assert glob.glob(str(tmp_path / "*.tmp")) == []


class TestRunSweepReal:
    def test_rows_in_plan_order_with_real_metrics(self, serial):
        _, result, _ = serial
        assert [(r.bandwidth_hz, r.qgsr_db) for r in result.rows] == \
            [(100e6, 16.0), (200e6, 16.0)]
        assert result.failures == []
        for row in result.rows:
            assert 0.0 <= row.cp_mean <= 1.0
            assert row.h_mean > 0.9
            assert "!" not in row.seeds
        assert result.baseline_bw80_hz > 1e9
        assert result.rows[0].qcbr == pytest.approx(
            100e6 / result.baseline_bw80_hz)

    def test_full_resume_recomputes_nothing(self, serial):
        out, result, original = serial
        again = run_sweep(PLAN, out_csv=out, jobs=1)
        assert again.rows == result.rows          # wall_s comes from the file
        assert out.read_bytes() == original

    def test_partial_resume_recomputes_only_missing(self, serial, tmp_path):
        out, result, original = serial
        stub = tmp_path / "partial.csv"
        lines = original.decode().splitlines()
        stub.write_text("\n".join(lines[:-1]) + "\n")  # drop the last row
        res = run_sweep(PLAN, out_csv=stub, jobs=1)
        assert res.rows[0] == result.rows[0]
        fresh, old = res.rows[1], result.rows[1]
        assert fresh.csv_line().rsplit(",", 1)[0] == \
            old.csv_line().rsplit(",", 1)[0]
        assert res.baseline_bw80_hz == result.baseline_bw80_hz

    def test_mismatched_plan_is_refused(self, serial):
        out, _, _ = serial
        other = dataclasses.replace(PLAN, base_seed=99)
        with pytest.raises(ValueError, match="different plan"):
            run_sweep(other, out_csv=out, jobs=1)

    def test_parallel_equals_serial(self, serial, tmp_path):
        _, result, _ = serial
        out2 = tmp_path / "par.csv"
        write_rows_csv(out2, [], result.baseline_bw80_hz, result.baseline_cp,
                       _plan_sha(PLAN))
        par = run_sweep(PLAN, out_csv=out2, jobs=2)
        assert len(par.rows) == len(result.rows)
        for a, b in zip(par.rows, result.rows):
            assert a.csv_line().rsplit(",", 1)[0] == \
                b.csv_line().rsplit(",", 1)[0]

    def test_single_point_matches_run_point(self, serial):
        _, result, _ = serial
        seeds = [derive_seeds(PLAN.base_seed, 0, 0)]
        spec = dataclasses.replace(PLAN.noise_template,
                                   bandwidth_hz=100e6, qgsr_db=16.0)
        row = run_point(PLAN.laser, spec, PLAN.sim, seeds,
                        baseline_bw80=result.baseline_bw80_hz)
        ref = result.rows[0]
        assert row.csv_line().rsplit(",", 1)[0] == \
            ref.csv_line().rsplit(",", 1)[0]
