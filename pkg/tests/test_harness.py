"""Harness tests: scenario plumbing, the closed-loop engine, comparison
tables, figures, and the command-line front end."""

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from antiroll.control import identify_state_space, save_model
from antiroll.data import (ExcitationConfig, TrajectoryLog,
                           check_persistent_excitation, concatenate,
                           load_library, partition)
from antiroll.harness import (RunMetrics, collect_data, compare, emit_plots,
                              exit_code_for, load_controller_profile, load_run,
                              load_scenario, packaged_config, run_closed_loop)
from antiroll.harness.cli import main as cli_main
from antiroll.harness.controllers import build_library
from antiroll.harness.loop import RunResult


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


PROFILE_SMALL = """
t_ini = 20
horizon = 20
input_weights = 1.0, 0.0005
output_weights = 0.0
ridge = 100.0
mismatch_penalty = 1e8
input_min = -200.0, 70.0
input_max = 200.0, 120.0
output_min = -1.0
output_max = 1.0
sample_period = 0.01
"""


def write_scenario(path: Path, **over) -> Path:
    fields = {
        "vehicle": str(packaged_config("vehicles/sedan.cfg")),
        "track": "three-turn",
        "terrain": "flat",
        "controller": "driver",
        "controller_config": str(packaged_config("controllers/driver.cfg")),
        "v_ref": 90.0,
        "steer_source": "driver",
        "duration": 5.0,
        "seed": 0,
        "output_dir": str(path.parent / "out"),
    }
    fields.update(over)
    lines = [f"{key} = {value}" for key, value in fields.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="module")
def workdir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("harness")


@pytest.fixture(scope="module")
def small_profile(workdir) -> Path:
    path = workdir / "small-profile.cfg"
    path.write_text(PROFILE_SMALL)
    return path


@pytest.fixture(scope="module")
def mini_log(workdir) -> TrajectoryLog:
    scenario = load_scenario(packaged_config("scenarios/sedan-data.cfg"),
                             output_dir=workdir / "mini-data")
    return collect_data(scenario, samples=800)


@pytest.fixture(scope="module")
def mini_library(workdir, mini_log) -> Path:
    path = workdir / "mini.lib"
    build_library([mini_log], t_ini=20, horizon=20, out_path=path)
    return path


class TestScenarioConfig:
    def test_packaged_scenarios_load(self):
        for name in ("sedan-1", "sedan-2", "truck", "sedan-riverbed",
                     "sedan-driver", "sedan-full", "sedan-lmpc",
                     "truck-lmpc", "riverbed-lmpc"):
            scenario = load_scenario(packaged_config(f"scenarios/{name}.cfg"))
            assert scenario.duration_s > 0
            assert scenario.vehicle_file.is_file()
            assert scenario.controller_file.is_file()

    def test_profile_numbers(self):
        profile = load_controller_profile(
            packaged_config("controllers/deepc-sedan-1.cfg"))
        cfg = profile.control
        assert cfg.t_ini == 100 and cfg.horizon == 100
        assert np.allclose(cfg.input_weights, [1.0, 5e-4])
        assert np.allclose(cfg.output_weights, [0.0])
        assert cfg.ridge == 100.0
        assert cfg.mismatch_penalty == 1e8
        assert np.allclose(cfg.input_lower, [-200.0, 70.0])
        assert np.allclose(cfg.input_upper, [200.0, 120.0])
        assert profile.reduce_q == 600
        assert profile.sample_period == 0.01

    def test_second_tuning_differs_only_in_speed_weight(self):
        one = load_controller_profile(
            packaged_config("controllers/deepc-sedan-1.cfg")).control
        two = load_controller_profile(
            packaged_config("controllers/deepc-sedan-2.cfg")).control
        assert np.allclose(two.input_weights, [1.0, 1e-4])
        assert np.allclose(one.input_weights[:1], two.input_weights[:1])

    def test_missing_vehicle_rejected(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", vehicle="missing.cfg")
        with pytest.raises(FileNotFoundError, match="vehicle"):
            load_scenario(path)

    def test_bad_duration_rejected(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", duration=0.0)
        with pytest.raises(ValueError, match="duration"):
            load_scenario(path)

    def test_unknown_track_rejected(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", track="moebius")
        with pytest.raises(KeyError, match="moebius"):
            load_scenario(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", flux_capacitor=1.21)
        with pytest.raises(ValueError, match="flux_capacitor"):
            load_scenario(path)

    def test_seed_override(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", seed=3)
        assert load_scenario(path).seed == 3
        assert load_scenario(path, seed=11).seed == 11


class TestCollect:
    def test_byte_identical_for_fixed_seed(self, tmp_path):
        logs = []
        for sub in ("a", "b"):
            scenario = load_scenario(
                packaged_config("scenarios/sedan-data.cfg"),
                output_dir=tmp_path / sub)
            logs.append(collect_data(scenario, samples=300))
        assert sha(tmp_path / "a" / "log.csv") == sha(tmp_path / "b" / "log.csv")
        assert logs[0].content_hash() == logs[1].content_hash()

    def test_seed_changes_the_data(self, tmp_path):
        hashes = []
        for seed in (0, 1):
            scenario = load_scenario(
                packaged_config("scenarios/sedan-data.cfg"), seed=seed,
                output_dir=tmp_path / f"s{seed}")
            hashes.append(collect_data(scenario, samples=300).content_hash())
        assert hashes[0] != hashes[1]

    def test_provenance_written(self, tmp_path):
        scenario = load_scenario(packaged_config("scenarios/sedan-data.cfg"),
                                 output_dir=tmp_path / "d")
        record = collect_data(scenario, samples=300)
        meta = json.loads((tmp_path / "d" / "provenance.json").read_text())
        assert meta["content_hash"] == record.content_hash()
        assert meta["samples"] == 300
        assert meta["excitation_seed"] == scenario.seed

    def test_zero_excitation_is_underexcited(self, tmp_path):
        scenario = load_scenario(packaged_config("scenarios/sedan-data.cfg"),
                                 output_dir=tmp_path / "z")
        quiet = collect_data(
            scenario, ExcitationConfig(stds=(0.0, 0.0), seed=0),
            samples=800, persist=False)
        order = 206  # history plus horizon plus a presumed state dimension
        assert not check_persistent_excitation(quiet.u, order)["is_pe"]

    def test_default_excitation_carries_full_order(self, mini_log):
        assert check_persistent_excitation(mini_log.u, 206)["is_pe"]


class TestClosedLoop:
    def test_driver_smoke(self, tmp_path):
        scenario = write_scenario(tmp_path / "s.cfg")
        result = run_closed_loop(load_scenario(scenario))
        metrics = result.metrics
        assert metrics.rollover is False
        assert metrics.violation_count == 0
        assert metrics.closed_loop_cost == 0.0  # driver inputs are the reference
        assert abs(metrics.mean_speed_kmh - 90.0) < 2.0
        assert result.log.length == 500
        out = tmp_path / "out"
        for name in ("trace.csv", "metrics.json", "timing.json"):
            assert (out / name).is_file()

    def test_run_byte_determinism(self, tmp_path):
        digests = []
        for sub in ("a", "b"):
            path = write_scenario(tmp_path / f"{sub}.cfg",
                                  output_dir=str(tmp_path / sub))
            run_closed_loop(load_scenario(path))
            digests.append((sha(tmp_path / sub / "trace.csv"),
                            sha(tmp_path / sub / "metrics.json")))
        assert digests[0] == digests[1]

    def test_data_driven_small(self, tmp_path, small_profile, mini_library):
        path = write_scenario(
            tmp_path / "s.cfg", controller="rd-deepc",
            controller_config=str(small_profile),
            library=str(mini_library), duration=4.0)
        result = run_closed_loop(load_scenario(path))
        metrics = result.metrics
        assert metrics.rollover is False
        assert result.fallback_count == 0
        assert metrics.solve_time_median_s > 0.0
        assert metrics.solve_time_max_s >= metrics.solve_time_mean_s
        # the first two seconds bootstrap on reference passthrough
        assert result.solve_ms.size == 400 - 20
        assert exit_code_for(result) == 0

    def test_persisted_cost_matches_recompute(self, tmp_path, small_profile,
                                              mini_library):
        path = write_scenario(
            tmp_path / "s.cfg", controller="rd-deepc",
            controller_config=str(small_profile),
            library=str(mini_library), duration=4.0)
        result = run_closed_loop(load_scenario(path))
        replay = load_run(tmp_path / "out")
        again = replay.recompute_cost()
        assert math.isclose(again, result.metrics.closed_loop_cost,
                            rel_tol=1e-12, abs_tol=1e-15)

    def test_model_based_small(self, tmp_path, workdir, small_profile,
                               mini_log):
        model = identify_state_space(mini_log, order=6)
        model_path = workdir / "mini-model.npz"
        save_model(model, model_path)
        path = write_scenario(
            tmp_path / "s.cfg", controller="lmpc",
            controller_config=str(small_profile),
            model=str(model_path), duration=4.0)
        result = run_closed_loop(load_scenario(path))
        assert result.metrics.rollover is False
        assert result.fallback_count == 0

    def test_missing_library_reported(self, tmp_path, small_profile):
        path = write_scenario(tmp_path / "s.cfg", controller="rd-deepc",
                              controller_config=str(small_profile))
        with pytest.raises(ValueError, match="library"):
            run_closed_loop(load_scenario(path))

    def test_rollover_terminates_early_with_metrics(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", v_ref=105.0, duration=35.0)
        result = run_closed_loop(load_scenario(path))
        metrics = result.metrics
        assert metrics.rollover is True
        assert metrics.violation_count >= 1
        assert metrics.ltr_peak >= 1.0
        assert result.log.length < 3500  # ended before the full duration
        assert exit_code_for(result) == 3
        assert (tmp_path / "out" / "metrics.json").is_file()

    def test_metrics_invariant_enforced(self):
        with pytest.raises(ValueError, match="rollover"):
            RunMetrics(closed_loop_cost=0.0, solve_time_mean_s=0.0,
                       solve_time_max_s=0.0, solve_time_median_s=0.0,
                       ltr_peak=0.5, violation_count=0, rollover=True,
                       mean_speed_kmh=90.0)


class TestLibraryConcat:
    def test_columns_never_span_recordings(self, mini_log):
        first = mini_log.slice(0, 500)
        second = mini_log.slice(500, 800)
        part_a = partition(first, 20, 20)
        part_b = partition(second, 20, 20)
        lib = concatenate([part_a, part_b])
        assert lib.n_columns == part_a.n_columns + part_b.n_columns
        assert lib.n_columns == (500 - 39) + (300 - 39)
        # the merged columns are exactly the per-recording columns, so
        # every column is a contiguous window of a single recording
        assert np.array_equal(
            lib.stacked(), np.hstack([part_a.stacked(), part_b.stacked()]))
        # the window straddling the seam appears nowhere as a column
        seam = np.concatenate([
            np.vstack([first.u[-20:], second.u[:20]]).ravel(),
            np.vstack([first.y[-20:], second.y[:20]]).ravel()])
        matches = np.all(np.isclose(lib.stacked().T, seam), axis=1)
        assert not matches.any()

    def test_multi_log_identification(self, mini_log):
        halves = [mini_log.slice(0, 400), mini_log.slice(400, 800)]
        model = identify_state_space(halves, order=6)
        assert model.fit.training_samples == 400 + 320
        assert model.fit.nrms_max < 1.0


class TestCompare:
    def test_mismatched_weights_rejected(self, tmp_path):
        a = write_scenario(tmp_path / "a.cfg", output_dir=str(tmp_path / "a"))
        b = write_scenario(
            tmp_path / "b.cfg",
            controller_config=str(
                packaged_config("controllers/deepc-sedan-2.cfg")),
            output_dir=str(tmp_path / "b"))
        with pytest.raises(ValueError, match="weights"):
            compare([load_scenario(a), load_scenario(b)])

    def test_table_and_cost_audit(self, tmp_path, small_profile, mini_library):
        a = write_scenario(tmp_path / "a.cfg", controller="rd-deepc",
                           controller_config=str(small_profile),
                           library=str(mini_library), duration=4.0,
                           output_dir=str(tmp_path / "a"))
        b = write_scenario(tmp_path / "b.cfg", duration=4.0,
                           controller_config=str(small_profile),
                           output_dir=str(tmp_path / "b"))
        report = compare([load_scenario(a), load_scenario(b)],
                         out_dir=tmp_path / "cmp")
        assert len(report.rows) == 2
        assert report.csv_path.is_file() and report.text_path.is_file()
        header = report.text.splitlines()[0]
        assert "cost" in header and "violations" in header
        for row, result in zip(report.rows, report.results):
            assert math.isclose(row["cost"], result.metrics.closed_loop_cost,
                                rel_tol=1e-12, abs_tol=1e-15)


class TestPlots:
    def test_three_deterministic_figures(self, tmp_path):
        path = write_scenario(tmp_path / "s.cfg", v_ref=105.0, duration=35.0)
        result = run_closed_loop(load_scenario(path), persist=False)
        first = emit_plots([result], tmp_path / "f1")
        second = emit_plots([result], tmp_path / "f2")
        assert [p.name for p in first] == [
            "comparison-ltr.svg", "comparison-speed.svg",
            "comparison-steering.svg"]
        assert [sha(p) for p in first] == [sha(p) for p in second]
        assert "limit crossed" in first[0].read_text()

    def test_empty_log_errors_without_files(self, tmp_path):
        empty = TrajectoryLog(u=np.empty((0, 2)), y=np.empty((0, 1)),
                              sample_period=0.01)
        metrics = RunMetrics(closed_loop_cost=0.0, solve_time_mean_s=0.0,
                             solve_time_max_s=0.0, solve_time_median_s=0.0,
                             ltr_peak=0.0, violation_count=0, rollover=False,
                             mean_speed_kmh=0.0)
        hollow = RunResult(
            label="x", metrics=metrics, log=empty, time_s=np.empty(0),
            speed_kmh=np.empty(0), steer_ref_deg=np.empty(0),
            solve_ms=np.empty(0), input_lower=np.full(2, -np.inf),
            input_upper=np.full(2, np.inf), input_weights=np.ones(2),
            output_weights=np.zeros(1), v_ref_kmh=90.0, fallback_count=0)
        target = tmp_path / "figs"
        with pytest.raises(ValueError, match="empty"):
            emit_plots([hollow], target)
        assert not target.exists() or not list(target.iterdir())


class TestCli:
    def test_pipeline_and_exit_codes(self, tmp_path, small_profile):
        data_dir = tmp_path / "data"
        rc = cli_main(["collect",
                       "--scenario", str(packaged_config(
                           "scenarios/sedan-data.cfg")),
                       "--out", str(data_dir), "--samples", "700"])
        assert rc == 0
        lib = tmp_path / "cli.lib"
        # keep enough columns that the hard match on the 20-step input
        # history (40 equalities) leaves room to shape the plan
        rc = cli_main(["build-lib", "--log", str(data_dir / "log.csv"),
                       "--out", str(lib), "--t-ini", "20", "--horizon", "20",
                       "--reduce", "120"])
        assert rc == 0
        assert load_library(lib).n_columns == 120
        model = tmp_path / "cli-model.npz"
        rc = cli_main(["identify", "--log", str(data_dir / "log.csv"),
                       "--order", "5", "--out", str(model)])
        assert rc == 0 and model.is_file()
        scenario = write_scenario(tmp_path / "s.cfg", controller="rd-deepc",
                                  controller_config=str(small_profile),
                                  library=str(lib), duration=4.0)
        rc = cli_main(["run", "--scenario", str(scenario),
                       "--out", str(tmp_path / "run")])
        assert rc == 0
        rc = cli_main(["plot", "--run", str(tmp_path / "run"),
                       "--out", str(tmp_path / "figs"), "--stem", "solo"])
        assert rc == 0
        assert (tmp_path / "figs" / "solo-ltr.svg").is_file()

    def test_rollover_exit_code(self, tmp_path):
        scenario = write_scenario(tmp_path / "s.cfg", v_ref=105.0,
                                  duration=35.0)
        rc = cli_main(["run", "--scenario", str(scenario),
                       "--out", str(tmp_path / "roll")])
        assert rc == 3

    def test_unknown_scenario_fails_cleanly(self, capsys):
        rc = cli_main(["run", "--scenario", "not-a-scenario"])
        assert rc == 1
        assert "error" in capsys.readouterr().err
