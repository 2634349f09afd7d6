import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from branchhull.experiments import (
    ExperimentGrid,
    ResultTable,
    desk_noise_grid,
    desk_phase_grid,
    emit_csv,
    emit_plot_script,
    noise_sweep,
    phase_diagram,
    run_trial,
    trial_seed,
)
from branchhull.parallel import parallel_map, worker_count
from branchhull.solver import SolverOptions

SMALL = ExperimentGrid(dims=[(2, 2)], Ls=[6, 16], trials=2, base_seed=3)


def _strip_clock(table):
    return [dataclasses.replace(r, wallclock_s=0.0) for r in table.rows]


class TestSeeds:
    def test_known_value_is_stable(self):
        assert trial_seed(0, 5, 5, 60, 0.0, 0) == trial_seed(0, 5, 5, 60, 0.0, 0)
        assert 0 <= trial_seed(0, 5, 5, 60, 0.0, 0) < 2**64

    @given(st.integers(0, 1000), st.integers(0, 99))
    def test_distinct_trials(self, base, trial):
        assert trial_seed(base, 3, 3, 20, 0.1, trial) != trial_seed(base, 3, 3, 20, 0.1, trial + 1)

    def test_alpha_int_and_float_agree(self):
        assert trial_seed(1, 2, 2, 9, 0, 0) == trial_seed(1, 2, 2, 9, 0.0, 0)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentGrid(dims=[(0, 2)], Ls=[4])
        with pytest.raises(ValueError):
            ExperimentGrid(dims=[(2, 2)], Ls=[4], trials=0)
        with pytest.raises(ValueError):
            ExperimentGrid(dims=[(2, 2)], Ls=[4], alphas=[-0.1])

    def test_presets(self):
        g = desk_phase_grid()
        assert len(list(g.cells())) == 4 * 12
        n = desk_noise_grid()
        assert n.alphas[0] == 0.0 and n.alphas[-1] == 1.0 and len(n.alphas) == 11

    def test_phase_rejects_noise(self):
        with pytest.raises(ValueError):
            phase_diagram(ExperimentGrid(dims=[(2, 2)], Ls=[8], alphas=[0.1]))

    def test_noise_rejects_large_alpha(self):
        with pytest.raises(ValueError):
            noise_sweep(ExperimentGrid(dims=[(2, 2)], Ls=[8], alphas=[1.5]))


class TestSweeps:
    def test_empty_grid(self, tmp_path):
        table = phase_diagram(ExperimentGrid(dims=[], Ls=[10]))
        assert len(table) == 0 and table.aggregate() == []
        path = tmp_path / "empty.csv"
        emit_csv(table, path)
        assert path.read_bytes().count(b"\r\n") == 1
        with pytest.raises(ValueError):
            emit_plot_script(table, "phase", tmp_path / "p.gp")

    def test_single_trial_csv(self, tmp_path):
        table = phase_diagram(ExperimentGrid(dims=[(2, 2)], Ls=[16], trials=1))
        path = tmp_path / "one.csv"
        emit_csv(table, path)
        data = path.read_bytes()
        assert data.count(b"\r\n") == 2 and data.endswith(b"\r\n")
        header, row = data.decode().split("\r\n")[:2]
        assert header.split(",")[0] == "K" and len(row.split(",")) == len(header.split(","))

    def test_reemit_is_byte_identical(self, tmp_path):
        table = phase_diagram(SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(table, a)
        emit_csv(table, b)
        assert a.read_bytes() == b.read_bytes()

    def test_worker_count_does_not_change_rows(self):
        serial = phase_diagram(SMALL, workers=1)
        pooled = phase_diagram(SMALL, workers=2)
        assert _strip_clock(serial) == _strip_clock(pooled)

    def test_rows_follow_grid_order(self):
        table = phase_diagram(SMALL)
        keys = [(r.L, r.trial) for r in table.rows]
        assert keys == [(6, 0), (6, 1), (16, 0), (16, 1)]
        for r in table.rows:
            assert r.seed == trial_seed(3, r.K, r.N, r.L, r.alpha, r.trial)

    def test_many_measurements_recover(self):
        table = phase_diagram(ExperimentGrid(dims=[(2, 2)], Ls=[40], trials=3))
        assert all(r.success for r in table.rows)
        (cell,) = table.aggregate()
        assert cell.success_rate == 1.0

    def test_noise_rows_within_bound(self):
        grid = ExperimentGrid(dims=[(3, 3)], Ls=[40], alphas=[0.0, 0.2], trials=2)
        table = noise_sweep(grid)
        for c in table.aggregate():
            assert c.within_bound == 1.0

    def test_failed_solve_becomes_row(self):
        row = run_trial(2, 2, 10, 0.0, 0, 1, "no-such-target", 1e-5)
        assert not row.success and row.status.startswith("error")


class TestPlots:
    def test_phase_script(self, tmp_path):
        path = tmp_path / "phase.gp"
        emit_plot_script(phase_diagram(SMALL), "phase", path)
        text = path.read_text()
        assert "y = 2x" in text and "f(x) = 2*x" in text

    def test_noise_script_has_one_curve_per_alpha(self, tmp_path):
        grid = ExperimentGrid(dims=[(2, 2)], Ls=[12, 20], alphas=[0.0, 0.1, 0.5], trials=1,
                              solver=SolverOptions(max_iters=5000))
        path = tmp_path / "noise.gp"
        emit_plot_script(noise_sweep(grid), "noise", path)
        assert path.read_text().count("title 'alpha = ") == 3

    def test_kind_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            emit_plot_script(phase_diagram(SMALL), "noise", tmp_path / "x.gp")
        with pytest.raises(ValueError):
            emit_plot_script(ResultTable(), "bars", tmp_path / "x.gp")

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_csv(ResultTable(), tmp_path / "missing" / "x.csv")


class TestParallel:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("BH_THREADS", "3")
        assert worker_count() == 3
        assert worker_count(0) == 1

    def test_order_preserved(self):
        assert parallel_map(np.square, [3, 1, 2], workers=2) == [9, 1, 4]
