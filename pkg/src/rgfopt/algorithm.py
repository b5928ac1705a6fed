"""Per-step update law for all agents, with projections, step-size
schedules, and the deterministic run loop.

Each agent keeps a decision x^i constrained to a convex compact set and a
free surplus y^i.  One synchronous round, given mixing matrices (W_r row-
stochastic, W_c column-stochastic), gain delta, and step size gamma:

    x^i+ = project( sum_j W_r[i,j] x^j + delta y^i - gamma g^i )
    y^i+ = sum_j W_c[i,j] y^j - sum_j W_r[i,j] x^j + x^i - delta y^i

where g^i is the two-point gradient estimate of agent i's local cost at
x^i.  All reads are from the time-t snapshot; writes land at t+1.

Stacking phi = (x^1..x^N, y^1..y^N), the same round is phi+ = W phi + theta
with W the augmented matrix and theta^i the projection residual (zero on
surplus rows).  Because W is column-stochastic, the stacked mean obeys
mean(phi+) - mean(phi) = (1/N) sum_i theta^i exactly, which the runner can
verify step by step.
"""

from __future__ import annotations

import csv
import io
import math
import warnings as _warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from .graph import (
    Digraph,
    WeightPair,
    build_augmented,
    delta_hat,
    equal_neighbor_weights,
    is_strongly_connected,
    make_complete,
    make_cycle,
    make_random_strongly_connected,
    make_ring,
    matrix_power_gap_series,
)
from .oracle import ObjectiveStream, OracleConfig, gradient_free_oracle, make_stream

__all__ = [
    "Box",
    "Ball",
    "project",
    "StepSchedule",
    "inv_sqrt_schedule",
    "constant_schedule",
    "table_schedule",
    "AgentStates",
    "step_all",
    "theta_residual",
    "RunConfig",
    "Trace",
    "run",
    "ConfigError",
    "SimulationError",
    "make_graph",
    "fit_geometric_decay",
]

_DOMAIN_INIT = 0


class ConfigError(ValueError):
    """Run configuration fails validation."""


class SimulationError(RuntimeError):
    """Numerical failure during a run, with agent/time context."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo, hi]^dim."""

    lo: float
    hi: float
    dim: int = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"box needs lo < hi, got [{self.lo}, {self.hi}]")

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.clip(v, self.lo, self.hi)

    def contains(self, v: np.ndarray, tol: float = 1e-12) -> bool:
        return bool((v >= self.lo - tol).all() and (v <= self.hi + tol).all())

    @property
    def radius(self) -> float:
        """sup over the box of the Euclidean norm."""
        return max(abs(self.lo), abs(self.hi)) * math.sqrt(self.dim)

    def sample_uniform(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, shape)


@dataclass(frozen=True)
class Ball:
    """Euclidean ball of given center and radius."""

    center: np.ndarray
    ball_radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.ball_radius <= 0:
            raise ConfigError(f"ball radius must be positive, got {self.ball_radius}")
        c.flags.writeable = False
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        offset = v - self.center
        norms = np.linalg.norm(offset, axis=-1, keepdims=True)
        scale = np.where(norms > self.ball_radius, self.ball_radius / np.maximum(norms, 1e-300), 1.0)
        return self.center + offset * scale

    def contains(self, v: np.ndarray, tol: float = 1e-9) -> bool:
        return bool((np.linalg.norm(v - self.center, axis=-1) <= self.ball_radius + tol).all())

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.ball_radius)

    def sample_uniform(self, rng: np.random.Generator, shape) -> np.ndarray:
        # rejection from the bounding box; deterministic for a given rng
        rows = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0] if len(shape) == 1 else 1
        out = np.empty((rows, self.dim))
        filled = 0
        while filled < rows:
            cand = rng.uniform(-self.ball_radius, self.ball_radius, (rows, self.dim))
            keep = np.linalg.norm(cand, axis=1) <= self.ball_radius
            take = cand[keep][: rows - filled]
            out[filled:filled + take.shape[0]] = self.center + take
            filled += take.shape[0]
        return out.reshape(shape)


def project(feasible, v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the feasible set; idempotent."""
    return feasible.project(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class StepSchedule:
    """Positive non-increasing step sizes gamma(t).

    Kinds `inv_sqrt` (gamma0/sqrt(t+1)) and `constant` are non-summable by
    construction; a custom table is validated for positivity and monotonicity
    and extends with its final value.
    """

    kind: str
    gamma0: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("inv_sqrt", "constant", "table"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("inv_sqrt", "constant"):
            if self.gamma0 <= 0:
                raise ConfigError(f"gamma0 must be positive, got {self.gamma0}")
        else:
            tab = tuple(float(v) for v in self.table)
            if not tab:
                raise ConfigError("table schedule needs at least one value")
            if any(v <= 0 for v in tab):
                raise ConfigError("table entries must be positive")
            if any(b > a for a, b in zip(tab, tab[1:])):
                raise ConfigError("table entries must be non-increasing")
            object.__setattr__(self, "table", tab)

    def __call__(self, t: int) -> float:
        if self.kind == "inv_sqrt":
            return self.gamma0 / math.sqrt(t + 1.0)
        if self.kind == "constant":
            return self.gamma0
        return self.table[min(t, len(self.table) - 1)]


def inv_sqrt_schedule(gamma0: float = 1.0) -> StepSchedule:
    return StepSchedule(kind="inv_sqrt", gamma0=gamma0)


def constant_schedule(gamma: float) -> StepSchedule:
    return StepSchedule(kind="constant", gamma0=gamma)


def table_schedule(values) -> StepSchedule:
    return StepSchedule(kind="table", gamma0=1.0, table=tuple(values))


@dataclass(frozen=True)
class AgentStates:
    """Immutable snapshot of all agents: decisions x (N, p) and surpluses y (N, p)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 2:
            raise ValueError(f"x and y must both be (N, p), got {x.shape} and {y.shape}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n_agents(self) -> int:
        return self.x.shape[0]

    @property
    def stacked_mean(self) -> np.ndarray:
        """(1/N) * (sum_i x^i + sum_i y^i), the conserved augmented mean."""
        return (self.x.sum(axis=0) + self.y.sum(axis=0)) / self.n_agents


def _oracle_block(stream: ObjectiveStream, cfg: OracleConfig, x: np.ndarray, t: int) -> np.ndarray:
    n = x.shape[0]
    g = np.empty_like(x)
    for i in range(n):
        g[i] = gradient_free_oracle(stream, cfg, i, t, x[i])
    return g


def _step_core(states: AgentStates, wp: WeightPair, delta: float, gamma_t: float,
               stream: ObjectiveStream, cfg: OracleConfig, t: int, feasible):
    x, y = states.x, states.y
    g = _oracle_block(stream, cfg, x, t)
    mixed = wp.w_row @ x
    x_new = feasible.project(mixed + delta * y - gamma_t * g)
    y_new = wp.w_col @ y - mixed + x - delta * y
    if not np.isfinite(x_new).all() or not np.isfinite(y_new).all():
        bad = np.where(~(np.isfinite(x_new).all(axis=1) & np.isfinite(y_new).all(axis=1)))[0]
        raise SimulationError(f"non-finite state for agent(s) {bad.tolist()} after step t={t}")
    theta = x_new - mixed - delta * y
    return AgentStates(x=x_new, y=y_new), g, theta


def step_all(states: AgentStates, wp: WeightPair, delta: float, gamma_t: float,
             stream: ObjectiveStream, cfg: OracleConfig, t: int, feasible) -> AgentStates:
    """One synchronous round for all agents; exactly one oracle draw
    (two evaluations) per agent."""
    if gamma_t <= 0:
        raise ConfigError(f"gamma(t) must be positive, got {gamma_t}")
    new_states, _, _ = _step_core(states, wp, delta, gamma_t, stream, cfg, t, feasible)
    return new_states


def theta_residual(states_before: AgentStates, states_after: AgentStates,
                   wp: WeightPair, delta: float) -> tuple[np.ndarray, float]:
    """Projection residuals theta^i = x^i+ - (W_r x)^i - delta y^i and their
    summed norm Theta.  Residuals on surplus rows are identically zero and
    are not materialized."""
    theta = states_after.x - wp.w_row @ states_before.x - delta * states_before.y
    big_theta = float(np.linalg.norm(theta, axis=1).sum())
    return theta, big_theta


@dataclass(frozen=True)
class RunConfig:
    """Complete, JSON-serializable description of one simulation run."""

    n_agents: int = 10
    graph_kind: str = "random"          # cycle | ring | complete | random
    graph_seed: int = 7
    extra_edge_prob: float = 0.3
    weight_rule: str = "equal_neighbor"
    delta: float = 0.1
    mu_hat: float = 1e-4
    direction_law: str = "gaussian"
    schedule_kind: str = "inv_sqrt"     # inv_sqrt | constant
    gamma0: float = 1.0
    horizon: int = 5000
    feasible_kind: str = "box"          # box | ball
    feasible_lo: float = -5.0
    feasible_hi: float = 5.0
    ball_radius: float = 5.0
    dim: int = 1
    stream_name: str = "paper_quadratic"
    master_seed: int = 0
    record_surplus: bool = True
    record_oracle: bool = True
    check_delta_bound: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.mu_hat <= 0:
            raise ConfigError(f"mu_hat must be positive, got {self.mu_hat}")
        if self.gamma0 <= 0:
            raise ConfigError(f"gamma0 must be positive, got {self.gamma0}")
        if self.n_agents < 2:
            raise ConfigError(f"need at least 2 agents, got {self.n_agents}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.schedule_kind not in ("inv_sqrt", "constant"):
            raise ConfigError(f"unknown schedule kind {self.schedule_kind!r}")
        if self.feasible_kind not in ("box", "ball"):
            raise ConfigError(f"unknown feasible kind {self.feasible_kind!r}")


def make_graph(kind: str, n: int, seed: int = 0, extra_edge_prob: float = 0.3) -> Digraph:
    """Named topology constructor used by configs."""
    if kind == "cycle":
        return make_cycle(n)
    if kind == "ring":
        return make_ring(n)
    if kind == "complete":
        return make_complete(n)
    if kind == "random":
        return make_random_strongly_connected(n, extra_edge_prob, seed)
    raise ConfigError(f"unknown graph kind {kind!r}")


def fit_geometric_decay(gaps: np.ndarray, t_start: int = 5, t_end: int = 200):
    """Least-squares fit of log(gap_t) ~ log C + t log lambda over [t_start, t_end].

    `gaps[k]` is the value at power t = k+1.  Returns (C, lambda, r_squared).
    """
    t_end = min(t_end, len(gaps))
    ts = np.arange(t_start, t_end + 1, dtype=float)
    ys = np.log(np.maximum(gaps[t_start - 1:t_end], 1e-300))
    a = np.vstack([ts, np.ones_like(ts)]).T
    coef, residual, *_ = np.linalg.lstsq(a, ys, rcond=None)
    lam = float(np.exp(coef[0]))
    c = float(np.exp(coef[1]))
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(residual[0]) if len(residual) else float(((a @ coef - ys) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot
    return c, lam, r2


@dataclass
class Trace:
    """Recorded run: decisions, costs, spread, and optional diagnostics.

    Arrays are indexed by time 0..T for states and 0..T-1 for per-step
    quantities (gamma, oracle norms, residuals).
    """

    config: RunConfig
    x: np.ndarray                      # (T+1, N, p)
    cost: np.ndarray                   # (T+1, N) summed cost at each agent's decision
    spread: np.ndarray                 # (T+1,) max_i ||x^i - mean x||
    gamma: np.ndarray                  # (T,)
    x_star: np.ndarray | None = None   # (T+1, p)
    y: np.ndarray | None = None        # (T+1, N, p)
    g_norm: np.ndarray | None = None   # (T, N)
    theta: np.ndarray | None = None    # (T, N, p)
    graph_edges: list = field(default_factory=list)
    delta_hat_value: float = float("nan")
    lambda_fit: float | None = None
    c_fit: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    @property
    def n_agents(self) -> int:
        return self.x.shape[1]

    def metadata(self) -> dict:
        """Seed-and-config closure sufficient to reproduce the run bit-for-bit."""
        return {
            "config": self.config.to_dict(),
            "graph_edges": sorted(list(e) for e in self.graph_edges),
            "delta_hat": self.delta_hat_value,
            "lambda_fit": self.lambda_fit,
            "c_fit": self.c_fit,
            "warnings": list(self.warnings),
        }

    def to_csv_text(self) -> str:
        """Long-format CSV: t, agent, x..., global_cost, spread, x_star...

        Floats are written with shortest round-trip repr so identical runs
        produce identical bytes.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        p = self.x.shape[2]
        header = (["t", "agent"] + [f"x_{k}" for k in range(p)]
                  + ["global_cost", "spread"])
        if self.x_star is not None:
            header += [f"x_star_{k}" for k in range(p)]
        w.writerow(header)
        for t in range(self.x.shape[0]):
            for i in range(self.n_agents):
                row = [t, i] + [repr(float(v)) for v in self.x[t, i]]
                row += [repr(float(self.cost[t, i])), repr(float(self.spread[t]))]
                if self.x_star is not None:
                    row += [repr(float(v)) for v in self.x_star[t]]
                w.writerow(row)
        return buf.getvalue()


def _fit_practical_gain_bound(wp: WeightPair, delta: float, n: int):
    """Fit (C, lambda) of the augmented power decay at this delta and report
    the practical gain ceiling min(delta_hat, (1-lambda)/(2 sqrt(3) N C lambda))."""
    gaps = matrix_power_gap_series(build_augmented(wp, delta), 120)
    c_fit, lam_fit, _ = fit_geometric_decay(gaps, 5, 120)
    if 0.0 < lam_fit < 1.0 and c_fit > 0.0:
        practical = (1.0 - lam_fit) / (2.0 * math.sqrt(3.0) * n * c_fit * lam_fit)
    else:
        practical = 0.0
    return c_fit, lam_fit, practical


def run(config: RunConfig, stream: ObjectiveStream | None = None) -> Trace:
    """Execute the update law for t = 0..T-1 and record the trajectory.

    Deterministic for a given config: topology, coefficients, initial
    decisions, and oracle directions all derive from the recorded seeds.
    A delta above the conservative spectral bound (or above the fitted
    practical ceiling) triggers a warning, never an abort.
    """
    config.validate()
    g = make_graph(config.graph_kind, config.n_agents, config.graph_seed, config.extra_edge_prob)
    if not is_strongly_connected(g):
        raise ConfigError("communication digraph must be strongly connected")
    if config.weight_rule != "equal_neighbor":
        raise ConfigError(f"unknown weight rule {config.weight_rule!r}")
    wp = equal_neighbor_weights(g)

    if stream is None:
        try:
            stream = make_stream(config.stream_name, config.n_agents, config.dim, config.master_seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if stream.n_agents != config.n_agents or stream.dim != config.dim:
        raise ConfigError("stream shape does not match config")

    if config.feasible_kind == "box":
        feasible = Box(config.feasible_lo, config.feasible_hi, config.dim)
    else:
        feasible = Ball(np.zeros(config.dim), config.ball_radius)

    schedule = (inv_sqrt_schedule(config.gamma0) if config.schedule_kind == "inv_sqrt"
                else constant_schedule(config.gamma0))
    cfg = OracleConfig.uniform(config.n_agents, config.mu_hat, config.dim,
                               direction_law=config.direction_law, rng_seed=config.master_seed)

    dh = delta_hat(wp)
    run_warnings = []
    lam_fit = c_fit = None
    if config.check_delta_bound:
        c_fit, lam_fit, practical = _fit_practical_gain_bound(wp, config.delta, config.n_agents)
        ceiling = min(dh, practical)
        if config.delta > ceiling:
            msg = (f"delta={config.delta:g} exceeds the guaranteed gain ceiling "
                   f"min(delta_hat={dh:.3e}, fitted={practical:.3e}); "
                   f"convergence is not certified at this gain")
            run_warnings.append(msg)
            _warnings.warn(msg, RuntimeWarning, stacklevel=2)
        if lam_fit >= 1.0:
            msg = (f"augmented matrix powers diverge at delta={config.delta:g} "
                   f"(fitted rate {lam_fit:.4f} >= 1); surplus coupling is unstable "
                   f"on this topology")
            run_warnings.append(msg)
            _warnings.warn(msg, RuntimeWarning, stacklevel=2)

    n, p, t_end = config.n_agents, config.dim, config.horizon
    rng_init = np.random.default_rng(
        np.random.SeedSequence(entropy=config.master_seed, spawn_key=(_DOMAIN_INIT,)))
    x0 = feasible.sample_uniform(rng_init, (n, p))
    states = AgentStates(x=x0, y=np.zeros((n, p)))

    x_hist = np.empty((t_end + 1, n, p))
    cost = np.empty((t_end + 1, n))
    spread = np.empty(t_end + 1)
    gamma_hist = np.empty(t_end)
    has_star = stream.analytic_minimizer is not None
    x_star = np.empty((t_end + 1, p)) if has_star else None
    y_hist = np.empty((t_end + 1, n, p)) if config.record_surplus else None
    g_norm = np.empty((t_end, n)) if config.record_oracle else None
    theta_hist = np.empty((t_end, n, p)) if config.record_oracle else None

    def record_state(t: int):
        x_hist[t] = states.x
        cost[t] = stream.aggregate_cost(t, states.x)
        spread[t] = np.linalg.norm(states.x - states.x.mean(axis=0), axis=1).max()
        if has_star:
            x_star[t] = stream.analytic_minimizer(t)
        if y_hist is not None:
            y_hist[t] = states.y

    record_state(0)
    for t in range(t_end):
        gamma_t = schedule(t)
        gamma_hist[t] = gamma_t
        try:
            states, g_mat, theta = _step_core(states, wp, config.delta, gamma_t,
                                              stream, cfg, t, feasible)
        except SimulationError:
            raise
        except Exception as exc:
            raise SimulationError(f"step failed at t={t}: {exc}") from exc
        if g_norm is not None:
            g_norm[t] = np.linalg.norm(g_mat, axis=1)
            theta_hist[t] = theta
        record_state(t + 1)

    return Trace(
        config=config, x=x_hist, cost=cost, spread=spread, gamma=gamma_hist,
        x_star=x_star, y=y_hist, g_norm=g_norm, theta=theta_hist,
        graph_edges=sorted(g.edges), delta_hat_value=dh,
        lambda_fit=lam_fit, c_fit=c_fit, warnings=run_warnings,
    )
