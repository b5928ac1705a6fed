import math
import warnings

import numpy as np
import pytest

import rgfopt as r
from rgfopt.algorithm import (
    AgentStates,
    Ball,
    Box,
    ConfigError,
    RunConfig,
    SimulationError,
    StepSchedule,
    constant_schedule,
    inv_sqrt_schedule,
    project,
    step_all,
    table_schedule,
    theta_residual,
)
from rgfopt.graph import build_augmented, equal_neighbor_weights, make_cycle
from rgfopt.oracle import (
    ObjectiveStream,
    OracleConfig,
    constant_stream,
    gradient_free_oracle,
    linear_probe_stream,
)


class TestProjection:
    def test_box_clamps(self):
        box = Box(-5.0, 5.0, 1)
        assert project(box, np.array([7.0]))[0] == 5.0
        assert project(box, np.array([3.0]))[0] == 3.0
        assert project(box, np.array([-9.0]))[0] == -5.0

    def test_ball_radial_scaling(self):
        ball = Ball(np.zeros(2), 1.0)
        out = project(ball, np.array([3.0, 4.0]))
        assert np.allclose(out, [0.6, 0.8])

    def test_interior_points_fixed(self):
        ball = Ball(np.zeros(3), 2.0)
        v = np.array([0.5, -0.5, 1.0])
        assert np.array_equal(project(ball, v), v)

    @pytest.mark.parametrize("feasible", [Box(-2.0, 3.0, 4), Ball(np.array([1.0, -1.0, 0.0, 2.0]), 1.5)])
    def test_idempotent(self, feasible):
        rng = np.random.default_rng(5)
        v = rng.uniform(-10, 10, (100, 4))
        once = project(feasible, v)
        assert np.allclose(project(feasible, once), once, atol=1e-12)
        assert feasible.contains(once)

    @pytest.mark.parametrize("feasible", [Box(-5.0, 5.0, 3), Ball(np.zeros(3), 2.0)])
    def test_nonexpansive_on_random_pairs(self, feasible):
        rng = np.random.default_rng(11)
        u = rng.uniform(-20, 20, (1000, 3))
        v = rng.uniform(-20, 20, (1000, 3))
        du = project(feasible, u) - project(feasible, v)
        assert (np.linalg.norm(du, axis=1) <= np.linalg.norm(u - v, axis=1) + 1e-12).all()

    def test_box_validation(self):
        with pytest.raises(ConfigError):
            Box(2.0, -2.0, 1)

    def test_radius_values(self):
        assert Box(-5.0, 5.0, 1).radius == 5.0
        assert Box(-5.0, 5.0, 4).radius == pytest.approx(10.0)
        assert Ball(np.array([3.0, 4.0]), 1.0).radius == pytest.approx(6.0)

    def test_ball_uniform_sampling_inside(self):
        ball = Ball(np.array([1.0, 0.0]), 2.0)
        rng = np.random.default_rng(2)
        pts = ball.sample_uniform(rng, (50, 2))
        assert ball.contains(pts)


class TestSchedules:
    def test_inv_sqrt_formula(self):
        sched = inv_sqrt_schedule(2.0)
        for t in (0, 1, 8, 99):
            assert sched(t) == pytest.approx(2.0 / math.sqrt(t + 1))

    def test_constant(self):
        sched = constant_schedule(0.3)
        assert sched(0) == sched(1000) == 0.3

    def test_positive_and_nonincreasing(self):
        for sched in (inv_sqrt_schedule(1.0), constant_schedule(0.5),
                      table_schedule([0.5, 0.5, 0.2, 0.1])):
            vals = [sched(t) for t in range(50)]
            assert all(v > 0 for v in vals)
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_table_extends_with_last_value(self):
        sched = table_schedule([1.0, 0.5])
        assert sched(10) == 0.5

    def test_invalid_schedules_rejected(self):
        with pytest.raises(ConfigError):
            StepSchedule(kind="geometric")
        with pytest.raises(ConfigError):
            inv_sqrt_schedule(0.0)
        with pytest.raises(ConfigError):
            table_schedule([0.5, 0.6])
        with pytest.raises(ConfigError):
            table_schedule([0.5, -0.1])
        with pytest.raises(ConfigError):
            table_schedule([])


class TestStates:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            AgentStates(x=np.zeros((3, 1)), y=np.zeros((4, 1)))

    def test_arrays_immutable(self):
        s = AgentStates(x=np.zeros((2, 1)), y=np.zeros((2, 1)))
        with pytest.raises(ValueError):
            s.x[0, 0] = 1.0

    def test_stacked_mean(self):
        s = AgentStates(x=np.array([[1.0], [3.0]]), y=np.array([[2.0], [2.0]]))
        assert s.stacked_mean[0] == pytest.approx((1 + 3 + 2 + 2) / 2)


def _setup(n=6, dim=1, stream=None, delta=0.05, seed=0):
    g = make_cycle(n)
    wp = equal_neighbor_weights(g)
    stream = stream or constant_stream(n, dim)
    cfg = OracleConfig.uniform(n, 1e-4, dim, rng_seed=seed)
    feasible = Box(-10.0, 10.0, dim)
    return wp, stream, cfg, feasible, delta


class TestStepAll:
    def test_consensus_fixed_point(self):
        wp, stream, cfg, feasible, delta = _setup()
        x = np.full((6, 1), 1.7)
        states = AgentStates(x=x, y=np.zeros((6, 1)))
        out = step_all(states, wp, delta, 0.5, stream, cfg, 0, feasible)
        assert np.allclose(out.x, 1.7, atol=1e-15)
        assert np.allclose(out.y, 0.0, atol=1e-15)

    def test_rejects_nonpositive_gamma(self):
        wp, stream, cfg, feasible, delta = _setup()
        states = AgentStates(x=np.zeros((6, 1)), y=np.zeros((6, 1)))
        with pytest.raises(ConfigError):
            step_all(states, wp, delta, 0.0, stream, cfg, 0, feasible)

    def test_mean_conservation_each_step(self):
        # (1/N) sum phi(t+1) - (1/N) sum phi(t) == (1/N) sum theta(t)
        wp, _, cfg, feasible, delta = _setup(n=8, dim=2, seed=4)
        stream = linear_probe_stream(8, dim=2, seed=9, scale=2.0)
        cfg = OracleConfig.uniform(8, 1e-4, 2, rng_seed=4)
        rng = np.random.default_rng(1)
        states = AgentStates(x=rng.uniform(-5, 5, (8, 2)), y=np.zeros((8, 2)))
        for t in range(50):
            before = states
            states = step_all(states, wp, delta, 1.0 / math.sqrt(t + 1), stream, cfg, t, feasible)
            theta, _ = theta_residual(before, states, wp, delta)
            lhs = states.stacked_mean - before.stacked_mean
            rhs = theta.sum(axis=0) / 8
            assert np.abs(lhs - rhs).max() < 1e-10

    def test_pure_consensus_matches_matrix_powers(self):
        # with a constant stream the round is exactly linear, so the stacked
        # state must equal W^t phi(0); the decisions converge to the initial
        # decision average since surpluses start at zero
        wp, stream, cfg, feasible, delta = _setup(n=10, delta=0.01)
        rng = np.random.default_rng(1)
        x0 = rng.uniform(-5, 5, (10, 1))
        states = AgentStates(x=x0, y=np.zeros((10, 1)))
        w_aug = build_augmented(wp, delta).w_aug
        phi0 = np.vstack([x0, np.zeros((10, 1))])
        snapshots = {}
        for t in range(2000):
            states = step_all(states, wp, delta, 1.0 / math.sqrt(t + 1), stream, cfg, t, feasible)
            if t + 1 in (1, 5, 50, 500, 2000):
                snapshots[t + 1] = states.x
        for t, x in snapshots.items():
            ref = (np.linalg.matrix_power(w_aug, t) @ phi0)[:10]
            assert np.abs(x - ref).max() < 1e-10
        spread = np.abs(states.x - states.x.mean()).max()
        assert spread < 1e-10
        assert np.allclose(states.x, x0.mean(), atol=1e-10)

    def test_nonfinite_state_reported_with_context(self):
        # a corrupted surplus propagates through the linear update and must
        # surface as an explicit failure naming the agent
        wp, stream, cfg, feasible, delta = _setup(n=4)
        y = np.zeros((4, 1))
        y[2, 0] = np.inf
        states = AgentStates(x=np.zeros((4, 1)), y=y)
        with np.errstate(invalid="ignore"):
            with pytest.raises(SimulationError, match="agent"):
                step_all(states, wp, delta, 1.0, stream, cfg, 0, feasible)


class TestThetaResidual:
    def test_interior_step_equals_oracle_term(self):
        # no clipping inside a huge box: theta = -gamma * g exactly
        n, dim = 5, 2
        wp = equal_neighbor_weights(make_cycle(n))
        stream = linear_probe_stream(n, dim=dim, seed=2, scale=1.0)
        cfg = OracleConfig.uniform(n, 1e-3, dim, rng_seed=8)
        feasible = Box(-100.0, 100.0, dim)
        rng = np.random.default_rng(3)
        states = AgentStates(x=rng.uniform(-1, 1, (n, dim)), y=np.zeros((n, dim)))
        gamma = 0.2
        t = 0
        after = step_all(states, wp, 0.05, gamma, stream, cfg, t, feasible)
        theta, big = theta_residual(states, after, wp, 0.05)
        g = np.stack([gradient_free_oracle(stream, cfg, i, t, states.x[i]) for i in range(n)])
        assert np.allclose(theta, -gamma * g, atol=1e-12)
        assert big == pytest.approx(np.linalg.norm(gamma * g, axis=1).sum(), rel=1e-12)

    def test_constant_stream_zero_surplus_gives_zero(self):
        wp, stream, cfg, feasible, delta = _setup(n=4)
        states = AgentStates(x=np.full((4, 1), 0.3), y=np.zeros((4, 1)))
        after = step_all(states, wp, delta, 1.0, stream, cfg, 0, feasible)
        theta, big = theta_residual(states, after, wp, delta)
        assert np.allclose(theta, 0.0, atol=1e-15)
        assert big == 0.0

    def test_per_step_residual_bound(self):
        # ||theta^i|| <= gamma ||g^i|| + 2 delta ||y^i|| at every step
        config = RunConfig(horizon=150, master_seed=5, check_delta_bound=False)
        trace = r.run(config)
        theta_norm = np.linalg.norm(trace.theta, axis=2)
        y_norm = np.linalg.norm(trace.y[:-1], axis=2)
        bound = trace.gamma[:, None] * trace.g_norm + 2 * config.delta * y_norm
        assert (theta_norm <= bound + 1e-12).all()


class TestRun:
    def test_zero_horizon_gives_initial_state_only(self):
        trace = r.run(RunConfig(horizon=0, master_seed=1, check_delta_bound=False))
        assert trace.x.shape == (1, 10, 1)
        assert trace.gamma.shape == (0,)
        assert trace.spread.shape == (1,)

    def test_bitwise_deterministic(self):
        config = RunConfig(horizon=120, master_seed=9, check_delta_bound=False)
        t1 = r.run(config)
        t2 = r.run(config)
        assert np.array_equal(t1.x, t2.x)
        assert np.array_equal(t1.y, t2.y)
        assert np.array_equal(t1.cost, t2.cost)
        assert t1.to_csv_text() == t2.to_csv_text()

    def test_feasibility_every_step(self):
        trace = r.run(RunConfig(horizon=200, master_seed=2, check_delta_bound=False))
        assert (trace.x >= -5.0 - 1e-12).all() and (trace.x <= 5.0 + 1e-12).all()

    def test_gamma_matches_schedule(self):
        trace = r.run(RunConfig(horizon=50, master_seed=2, gamma0=2.0, check_delta_bound=False))
        expected = 2.0 / np.sqrt(np.arange(50) + 1.0)
        assert np.allclose(trace.gamma, expected, rtol=1e-15)

    def test_validation_errors(self):
        with pytest.raises(ConfigError):
            r.run(RunConfig(delta=0.0))
        with pytest.raises(ConfigError):
            r.run(RunConfig(horizon=-1))
        with pytest.raises(ConfigError):
            r.run(RunConfig(mu_hat=-1e-4))
        with pytest.raises(ConfigError):
            r.run(RunConfig(stream_name="nope", check_delta_bound=False))
        with pytest.raises(ConfigError):
            r.run(RunConfig(graph_kind="torus"))

    def test_nan_stream_raises_simulation_error(self):
        stream = ObjectiveStream(
            n_agents=10, dim=1,
            evaluate=lambda i, t, x: float("nan") if t >= 3 else float(np.sum(x) ** 2),
            aggregate_evaluate=lambda t, pts: (pts ** 2).sum(axis=1) * 10)
        config = RunConfig(horizon=10, master_seed=0, check_delta_bound=False)
        with pytest.raises(SimulationError, match="t=3"):
            r.run(config, stream=stream)

    def test_gain_ceiling_warning_recorded(self):
        with pytest.warns(RuntimeWarning):
            trace = r.run(RunConfig(horizon=5, master_seed=0, check_delta_bound=True))
        assert any("ceiling" in w for w in trace.warnings)
        assert trace.delta_hat_value < 1e-20

    def test_divergent_gain_flagged_on_one_way_cycle(self):
        # one-way cycles are spectrally unstable at gain 0.1
        with pytest.warns(RuntimeWarning):
            trace = r.run(RunConfig(graph_kind="cycle", horizon=5, master_seed=0))
        assert any("diverge" in w or "unstable" in w for w in trace.warnings)

    def test_metadata_round_trip(self):
        config = RunConfig(horizon=30, master_seed=4, check_delta_bound=False)
        trace = r.run(config)
        rebuilt = RunConfig.from_dict(trace.metadata()["config"])
        assert rebuilt == config
        trace2 = r.run(rebuilt)
        assert np.array_equal(trace.x, trace2.x)

    def test_unknown_config_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_dict({"horizon": 5, "bogus": 1})


class TestConsensusContraction:
    def test_spread_decays_and_sits_below_theory_scale(self, sv_trace):
        trace = sv_trace
        horizon = trace.horizon
        spread = trace.spread
        assert spread[horizon] < spread[horizon // 10]
        # ceiling 10 * gamma(T) * G1_hat * C_hat / (1 - lambda) with constants
        # fitted from the run itself
        from rgfopt.analysis import fit_constants_from_trace
        wp = equal_neighbor_weights(
            r.make_random_strongly_connected(10, 0.3, seed=trace.config.graph_seed))
        inputs = fit_constants_from_trace(trace, wp)
        gamma_t = trace.gamma[-1]
        ceiling = 10.0 * gamma_t * inputs.g1_fit * max(inputs.c_fit, 1.0) / (1.0 - inputs.lambda_fit)
        assert spread[horizon] < ceiling
