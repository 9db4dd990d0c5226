import os

import numpy as np
import pytest

from conftest import small_config
from pinchcast.config import ConfigError, dbm_to_watts
from pinchcast.experiments import (ARCH_CONV, ARCH_MASSIVE, ARCH_WD, ARCH_WM,
                                   CSV_HEADER, ResultRow, Scenario, apply_sweep,
                                   read_csv, run_scenario, sample_users,
                                   scenario_from_file, scenario_presets,
                                   write_csv)
from pinchcast.config import SystemConfig


def tiny_scenario(**overrides):
    base = small_config(grid_size=24, num_pas_per_waveguide=2,
                        max_dual_iterations=150, max_outer_iterations=30)
    defaults = dict(name="tiny", sweep_variable="power",
                    sweep_values=(-10.0, 0.0), architectures=(ARCH_WD,),
                    radiation_models=("proportional",), trials=2, seed=11,
                    base=base)
    defaults.update(overrides)
    return Scenario(**defaults)


class TestSampleUsers:
    def test_deterministic_under_seed(self):
        cfg = SystemConfig()
        a = sample_users(cfg, "uniform", np.random.default_rng(42))
        b = sample_users(cfg, "uniform", np.random.default_rng(42))
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.group_of, b.group_of)

    def test_separated_slab_membership(self):
        cfg = SystemConfig()
        users = sample_users(cfg, "separated", np.random.default_rng(0))
        second = users.positions[users.group_of == 1]
        assert np.all(second[:, 0] >= 2.5) and np.all(second[:, 0] <= 5.0)

    def test_uniform_mean_sanity(self):
        cfg = SystemConfig(users_per_group=(2500, 2500, 2500, 2500))
        users = sample_users(cfg, "uniform", np.random.default_rng(1))
        n = users.num_users
        for axis, extent in ((0, cfg.region_x), (1, cfg.region_y)):
            framework = users.positions[:, axis].mean()
            sigma = extent / np.sqrt(12.0) / np.sqrt(n)
            assert abs(framework - extent / 2) <= 3 * sigma

    def test_positions_inside_region(self):
        cfg = SystemConfig()
        for dist in ("uniform", "separated"):
            users = sample_users(cfg, dist, np.random.default_rng(3))
            users.validate(cfg)


class TestApplySweep:
    def test_power_converts_dbm(self):
        cfg = apply_sweep(SystemConfig(), "power", 10.0)
        assert cfg.total_power == pytest.approx(dbm_to_watts(10.0))

    def test_groups_track_waveguides(self):
        cfg = apply_sweep(SystemConfig(), "num_groups", 6)
        assert cfg.num_groups == 6 and cfg.num_waveguides == 6
        assert cfg.users_per_group == (3,) * 6

    def test_other_variables(self):
        assert apply_sweep(SystemConfig(), "num_pas", 10).num_pas_per_waveguide == 10
        assert apply_sweep(SystemConfig(), "num_users", 5).users_per_group == (5,) * 4
        assert apply_sweep(SystemConfig(), "region_x", 15.0).region_x == 15.0


class TestRunScenario:
    def test_single_row(self):
        scenario = tiny_scenario(sweep_values=(0.0,), trials=1)
        rows = run_scenario(scenario)
        assert len(rows) == 1
        row = rows[0]
        assert row.architecture == ARCH_WD and row.trial == 0
        assert row.objective > 0 and not row.failed

    def test_identical_bytes_across_runs_and_workers(self, tmp_path):
        scenario = tiny_scenario()
        paths = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
            rows = run_scenario(scenario, workers=workers)
            path = tmp_path / f"{tag}.csv"
            write_csv(rows, str(path))
            paths.append(path.read_bytes())
        assert paths[0] == paths[1] == paths[2]

    def test_mean_objective_monotone_in_power(self):
        scenario = tiny_scenario(sweep_values=(-10.0, 0.0, 10.0), trials=3)
        rows = run_scenario(scenario)
        means = []
        for value in scenario.sweep_values:
            sel = [r.objective for r in rows if r.sweep_value == value]
            assert len(sel) == 3
            means.append(np.mean(sel))
        assert means[0] <= means[1] <= means[2]

    def test_iteration_sweep_emits_trace_rows(self):
        scenario = tiny_scenario(sweep_variable="iterations",
                                 sweep_values=tuple(range(1, 6)),
                                 trials=1, random_init=True)
        rows = run_scenario(scenario)
        assert len(rows) == 5
        values = [r.objective for r in rows]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_baselines_share_radiation_label(self):
        scenario = tiny_scenario(
            sweep_values=(0.0,), trials=1,
            architectures=(ARCH_WD, ARCH_WM, ARCH_CONV, ARCH_MASSIVE),
            radiation_models=("equal", "proportional"))
        rows = run_scenario(scenario)
        # PASS architectures appear once per radiation model, baselines once
        assert sum(1 for r in rows if r.architecture == ARCH_WD) == 2
        assert sum(1 for r in rows if r.architecture == ARCH_CONV) == 1
        assert all(r.radiation_model == "none" for r in rows
                   if r.architecture in (ARCH_CONV, ARCH_MASSIVE))

    def test_unsorted_sweep_rejected(self):
        with pytest.raises(ConfigError):
            run_scenario(tiny_scenario(sweep_values=(0.0, -10.0)))


class TestCsv:
    def _rows(self):
        return [
            ResultRow("tiny", -10.0, ARCH_WD, "proportional", 0, 1.234567891,
                      (0.5, 0.25000000125), 7, 0.0),
            ResultRow("tiny", 0.0, ARCH_WM, "equal", 3, 12.3456789e-5,
                      (1e-12,), 12, 0.0),
        ]

    def test_header_only_for_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv([], str(path))
        assert path.read_text() == CSV_HEADER + "\n"

    def test_one_row_two_lines(self, tmp_path):
        path = tmp_path / "one.csv"
        write_csv(self._rows()[:1], str(path))
        text = path.read_text()
        assert text.count("\n") == 2
        assert "\r" not in text

    def test_round_trip_reproduces_bytes(self, tmp_path):
        path = tmp_path / "rt.csv"
        write_csv(self._rows(), str(path))
        parsed = read_csv(str(path))
        back = tmp_path / "rt2.csv"
        write_csv(parsed, str(back))
        assert path.read_bytes() == back.read_bytes()

    def test_failed_row_round_trip(self, tmp_path):
        row = ResultRow("tiny", 0.0, ARCH_WD, "proportional", 2,
                        float("nan"), (), -1, 0.0)
        path = tmp_path / "fail.csv"
        write_csv([row], str(path))
        parsed = read_csv(str(path))
        assert parsed[0].failed
        assert np.isnan(parsed[0].objective)
        assert parsed[0].group_min_rates == ()

    def test_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ConfigError):
            read_csv(str(path))


class TestScenarioFiles:
    def test_presets_exist(self):
        presets = scenario_presets()
        assert set(presets) == {f"fig{i}" for i in range(3, 10)}
        fig5 = presets["fig5"]
        assert fig5.sweep_variable == "num_pas"
        assert fig5.base.num_waveguides == 4 and fig5.base.num_groups == 4
        assert fig5.base.users_per_group == (3, 3, 3, 3)
        assert fig5.base.total_power == pytest.approx(dbm_to_watts(0.0))
        assert fig5.base.region_x == 10.0 and fig5.base.region_y == 6.0
        assert scenario_presets()["fig9"].user_distribution == "separated"

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "custom.cfg"
        path.write_text(
            "num_waveguides = 2\nnum_groups = 2\nusers_per_group = 1,1\n"
            "grid_size = 16\ntotal_power_dbm = 0\n"
            "scenario.name = custom\nscenario.sweep_variable = power\n"
            "scenario.sweep_values = -10,0\nscenario.architectures = wd\n"
            "scenario.radiation_models = equal\nscenario.trials = 1\n"
            "scenario.seed = 3\n")
        scenario = scenario_from_file(str(path))
        assert scenario.name == "custom"
        assert scenario.base.num_waveguides == 2
        assert scenario.sweep_values == (-10.0, 0.0)
        rows = run_scenario(scenario)
        assert len(rows) == 2

    def test_bad_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("frequency = 1\n")
        with pytest.raises(ConfigError):
            scenario_from_file(str(path))
