import json
import warnings

import numpy as np
import pytest

import rgfopt as r
from rgfopt.experiments import (
    experiment_diagnostics,
    experiment_fig2_3,
    experiment_fig4,
    rerun_from_metadata,
    sandwich_table,
    second_moment_check,
    unbiasedness_check,
)


@pytest.fixture(scope="module")
def fig23_small(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig23")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return experiment_fig2_3(seed=1, horizon=400, out_dir=out)


class TestTrackingExperiment:
    def test_artifact_files_exist(self, fig23_small):
        for key in ("trajectories", "regret", "consensus", "metadata", "plot_script"):
            assert fig23_small.paths[key].exists(), key

    def test_ten_trajectories_present(self, fig23_small):
        lines = fig23_small.paths["trajectories"].read_text().splitlines()
        agents = {int(ln.split(",")[1]) for ln in lines[1:]}
        assert agents == set(range(10))
        assert lines[0].startswith("t,agent,x_0,global_cost,spread,x_star_0")

    def test_regret_rows_cover_horizon(self, fig23_small):
        lines = fig23_small.paths["regret"].read_text().splitlines()
        assert len(lines) - 1 == 400 * 10

    def test_spread_decreases(self, fig23_small):
        trace = fig23_small.trace
        assert trace.spread[400] < trace.spread[100]

    def test_metadata_closure_reproduces_run(self, fig23_small):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            replay = rerun_from_metadata(fig23_small.paths["metadata"])
        assert np.array_equal(replay.x, fig23_small.trace.x)
        assert replay.to_csv_text() == fig23_small.paths["trajectories"].read_text()

    def test_metadata_records_graph_and_params(self, fig23_small):
        meta = json.loads(fig23_small.paths["metadata"].read_text())
        assert meta["experiment"] == "fig2_3"
        assert meta["config"]["delta"] == 0.1
        assert meta["config"]["mu_hat"] == 1e-4
        assert len(meta["graph_edges"]) >= 10
        assert "path_length" in meta


class TestAgentSweep:
    def test_small_sweep_artifacts(self, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = experiment_fig4(seed=2, agent_counts=(4, 8), horizon=250, out_dir=tmp_path)
        assert set(res.mean_time_avg) == {4, 8}
        assert all(len(c) == 250 for c in res.mean_time_avg.values())
        lines = res.paths["series"].read_text().splitlines()
        assert lines[0] == "t,n_agents,mean_time_avg_regret"
        assert len(lines) - 1 == 2 * 250
        meta = json.loads(res.paths["metadata"].read_text())
        assert meta["ring_kind"] == "ring"
        assert set(meta["final_values"]) == {"4", "8"}

    def test_one_way_cycle_variant_warns(self, tmp_path):
        with pytest.warns(RuntimeWarning):
            res = experiment_fig4(seed=2, agent_counts=(6,), horizon=50,
                                  out_dir=tmp_path, ring_kind="cycle")
        assert any(res.traces[6].warnings)


class TestDiagnosticsBundle:
    def test_structure_with_reduced_sampling(self, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = experiment_diagnostics(seed=3, horizon=300, n_samples=2000,
                                         out_dir=tmp_path)
        assert len(res.sandwich) == 20
        assert set(res.delta_hat_values) == {"cycle_10", "random_10"}
        assert all(0 < v < 1 for v in res.delta_hat_values.values())
        assert len(res.unbiasedness) == 5
        assert [row["dim"] for row in res.second_moment] == [1, 2, 5]
        assert np.isfinite(res.theta_ratio_max)
        for key in ("sandwich", "spectral", "summary"):
            assert res.paths[key].exists()
        summary = json.loads(res.paths["summary"].read_text())
        assert "delta_hat" in summary and "theta_ratio_max" in summary

    def test_spectral_rows_cover_grid(self, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = experiment_diagnostics(seed=3, horizon=60, n_samples=500,
                                         out_dir=tmp_path)
        for rows in res.spectral.values():
            assert [row.delta for row in rows] == [0.01, 0.05, 0.1, 0.2]


class TestCheckHelpers:
    def test_sandwich_reduced(self):
        rows = sandwich_table(n_points=6, n_samples=4000, seed=77)
        assert len(rows) == 6
        assert all(row["within"] for row in rows)

    def test_unbiasedness_reduced(self):
        rows = unbiasedness_check(n_points=2, n_draws=4000, fd_samples=20000, seed=13)
        assert all(row["within_4_sigma"] for row in rows)

    def test_second_moment_reduced(self):
        rows = second_moment_check(dims=(1, 3), n_draws=4000, seed=19)
        assert all(row["within"] for row in rows)

    def test_default_output_dir_is_timestamped(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = experiment_fig2_3(seed=5, horizon=20)
        assert res.out_dir.resolve().parent == (tmp_path / "out" / "fig2_3").resolve()
        assert res.paths["metadata"].exists()
