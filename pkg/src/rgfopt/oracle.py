"""Objective streams revealed by point evaluation, and the randomized
two-point gradient estimator built on Gaussian smoothing.

The estimator for a local cost f at point x with smoothing mu and random
direction xi is

    g = (f(x + mu * xi) - f(x)) / mu * xi,

which is an unbiased estimate of the gradient of the Gaussian-smoothed
surrogate f_mu when xi is standard normal.  A uniform-on-the-sphere
direction law is provided as well, but the smoothing identities are only
exact for the Gaussian law, which is the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ObjectiveStream",
    "OracleConfig",
    "RngStream",
    "OracleError",
    "sample_direction",
    "gradient_free_oracle",
    "smoothed_value_mc",
    "smoothed_value_mc_stats",
    "tracking_target",
    "paper_objective_stream",
    "linear_probe_stream",
    "constant_stream",
    "norm_stream",
    "make_stream",
    "STREAM_REGISTRY",
]

# Sub-stream domains under one master seed.  Directions advance the
# spawn key by (agent, t) so a draw is a pure function of the triple.
_DOMAIN_DIRECTION = 1
_DOMAIN_COEFF = 2


class OracleError(RuntimeError):
    """Evaluation failure in the gradient-free oracle."""


@dataclass(frozen=True)
class ObjectiveStream:
    """Family of per-agent convex costs, revealed only through evaluation.

    `evaluate(agent, t, x)` must be side-effect-free and convex in x for
    every agent and time (contract, enforced by construction for the built-in
    streams).  No gradient is ever exposed.

    Optional hooks speed up batch work without changing semantics:
    `evaluate_batch(agent, t, X)` maps an (m, p) block of points to (m,)
    values; `aggregate_evaluate(t, X)` returns the summed-over-agents cost
    at each row of X.
    """

    n_agents: int
    dim: int
    evaluate: Callable[[int, int, np.ndarray], float]
    analytic_minimizer: Callable[[int], np.ndarray] | None = None
    subgradient_bound: float | None = None
    evaluate_batch: Callable[[int, int, np.ndarray], np.ndarray] | None = None
    aggregate_evaluate: Callable[[int, np.ndarray], np.ndarray] | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def aggregate_cost(self, t: int, points: np.ndarray) -> np.ndarray:
        """Summed cost over all agents at each row of `points` (m, p) -> (m,)."""
        points = np.atleast_2d(points)
        if self.aggregate_evaluate is not None:
            return np.asarray(self.aggregate_evaluate(t, points), dtype=float)
        out = np.zeros(points.shape[0])
        for k in range(points.shape[0]):
            out[k] = sum(self.evaluate(j, t, points[k]) for j in range(self.n_agents))
        return out


@dataclass(frozen=True)
class OracleConfig:
    """Per-agent smoothing parameters plus the direction sampling law."""

    mu: np.ndarray
    dim: int
    direction_law: str = "gaussian"
    rng_seed: int = 0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if (mu <= 0).any():
            raise ValueError("all smoothing parameters must be positive")
        if self.direction_law not in ("gaussian", "uniform_sphere"):
            raise ValueError(f"unknown direction law {self.direction_law!r}")
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)

    @property
    def mu_hat(self) -> float:
        return float(self.mu.max())

    @classmethod
    def uniform(cls, n_agents: int, mu_hat: float, dim: int,
                direction_law: str = "gaussian", rng_seed: int = 0) -> "OracleConfig":
        return cls(mu=np.full(n_agents, float(mu_hat)), dim=dim,
                   direction_law=direction_law, rng_seed=rng_seed)


class RngStream:
    """Deterministic per-agent randomness, addressable by (agent, t).

    Each (master_seed, agent, t) triple yields an independent generator, so
    draws do not depend on call order and two runs with the same master seed
    reproduce identical direction sequences for every agent.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)

    def generator(self, agent: int, t: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed,
                                    spawn_key=(_DOMAIN_DIRECTION, agent, t))
        return np.random.default_rng(ss)

    def direction(self, agent: int, t: int, dim: int, law: str) -> np.ndarray:
        rng = self.generator(agent, t)
        xi = rng.standard_normal(dim)
        if law == "uniform_sphere":
            norm = np.linalg.norm(xi)
            while norm == 0.0:  # probability-zero guard
                xi = rng.standard_normal(dim)
                norm = np.linalg.norm(xi)
            xi = xi / norm
        return xi


def sample_direction(cfg: OracleConfig, agent: int, t: int) -> np.ndarray:
    """Random direction for (agent, t): i.i.d. standard normal coordinates
    under the gaussian law, or a unit vector uniform on the sphere."""
    return RngStream(cfg.rng_seed).direction(agent, t, cfg.dim, cfg.direction_law)


def gradient_free_oracle(stream: ObjectiveStream, cfg: OracleConfig,
                         agent: int, t: int, x: np.ndarray) -> np.ndarray:
    """Two-point gradient estimate; makes exactly two stream evaluations."""
    x = np.asarray(x, dtype=float)
    mu = float(cfg.mu[agent])
    xi = sample_direction(cfg, agent, t)
    f_shift = stream.evaluate(agent, t, x + mu * xi)
    f_base = stream.evaluate(agent, t, x)
    if not (math.isfinite(f_shift) and math.isfinite(f_base)):
        raise OracleError(
            f"non-finite objective value for agent {agent} at t={t}: "
            f"f(x+mu*xi)={f_shift!r}, f(x)={f_base!r}")
    return (f_shift - f_base) / mu * xi


def smoothed_value_mc_stats(stream: ObjectiveStream, agent: int, t: int,
                            x: np.ndarray, mu: float, n_samples: int,
                            seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of the Gaussian-smoothed value and its standard error.

    Returns (mean of f(x + mu * xi_k), sample std / sqrt(n)).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((n_samples, x.size))
    points = x[None, :] + mu * xi
    if stream.evaluate_batch is not None:
        vals = np.asarray(stream.evaluate_batch(agent, t, points), dtype=float)
    else:
        vals = np.array([stream.evaluate(agent, t, points[k]) for k in range(n_samples)])
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return float(vals.mean()), stderr


def smoothed_value_mc(stream: ObjectiveStream, agent: int, t: int, x: np.ndarray,
                      mu: float, n_samples: int, seed: int) -> float:
    """Monte Carlo estimate of the Gaussian-smoothed value at x."""
    return smoothed_value_mc_stats(stream, agent, t, x, mu, n_samples, seed)[0]


def tracking_target(t: float) -> float:
    """Reference signal 2*sin(0.008 t)/t, extended continuously to 0.016 at t=0."""
    if t == 0:
        return 0.016
    return 2.0 * math.sin(0.008 * t) / t


def paper_objective_stream(n_agents: int, dim: int = 1, coeff_seed: int = 0) -> ObjectiveStream:
    """Time-varying quadratic tracking stream over the box [-5, 5]^p.

    Agent i at time t pays a_i ||x||^2 - 2 b_i d(t) sum(x) + c_i p d(t)^2 with
    d = tracking_target.  Coefficients are drawn uniform(0.5, 1.5) and then
    rescaled so each of sum(a), sum(b), sum(c) equals N exactly, which makes
    the aggregate cost N * ||x - d(t) 1||^2 with minimizer d(t) 1, interior
    to the box.
    """
    if n_agents < 1:
        raise ValueError(f"need n_agents >= 1, got {n_agents}")
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=coeff_seed, spawn_key=(_DOMAIN_COEFF,)))
    a = rng.uniform(0.5, 1.5, n_agents)
    b = rng.uniform(0.5, 1.5, n_agents)
    c = rng.uniform(0.5, 1.5, n_agents)
    a *= n_agents / a.sum()
    b *= n_agents / b.sum()
    c *= n_agents / c.sum()
    for arr in (a, b, c):
        arr.flags.writeable = False

    # Gradient 2 a_i x - 2 b_i d 1 over the box [-5, 5]^p; |d| <= 0.016.
    d_bound = 0.016
    sub_bound = float(max(2.0 * a[i] * 5.0 + 2.0 * b[i] * d_bound for i in range(n_agents))
                      * math.sqrt(dim))

    def evaluate(agent: int, t: int, x: np.ndarray) -> float:
        d = tracking_target(t)
        x = np.asarray(x, dtype=float)
        return float(a[agent] * x @ x - 2.0 * b[agent] * d * x.sum() + c[agent] * dim * d * d)

    def evaluate_batch(agent: int, t: int, points: np.ndarray) -> np.ndarray:
        d = tracking_target(t)
        return (a[agent] * (points ** 2).sum(axis=1)
                - 2.0 * b[agent] * d * points.sum(axis=1)
                + c[agent] * dim * d * d)

    def aggregate_evaluate(t: int, points: np.ndarray) -> np.ndarray:
        d = tracking_target(t)
        return (a.sum() * (points ** 2).sum(axis=1)
                - 2.0 * b.sum() * d * points.sum(axis=1)
                + c.sum() * dim * d * d)

    def analytic_minimizer(t: int) -> np.ndarray:
        return np.full(dim, tracking_target(t))

    return ObjectiveStream(
        n_agents=n_agents, dim=dim, evaluate=evaluate,
        analytic_minimizer=analytic_minimizer, subgradient_bound=sub_bound,
        evaluate_batch=evaluate_batch, aggregate_evaluate=aggregate_evaluate,
        name="paper_quadratic",
        params={"coeff_seed": coeff_seed, "a": a.tolist(), "b": b.tolist(), "c": c.tolist()},
    )


def linear_probe_stream(n_agents: int, dim: int = 1, seed: int = 0,
                        scale: float = 1.0) -> ObjectiveStream:
    """Per-agent linear costs <u_i, x> with seeded unit directions times scale.

    The two-point estimator is exact on linear functions, which makes this
    stream a sharp probe for oracle identities.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_DOMAIN_COEFF,)))
    u = rng.standard_normal((n_agents, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    u *= scale
    u.flags.writeable = False

    def evaluate(agent: int, t: int, x: np.ndarray) -> float:
        return float(u[agent] @ np.asarray(x, dtype=float))

    def evaluate_batch(agent: int, t: int, points: np.ndarray) -> np.ndarray:
        return points @ u[agent]

    def aggregate_evaluate(t: int, points: np.ndarray) -> np.ndarray:
        return points @ u.sum(axis=0)

    return ObjectiveStream(
        n_agents=n_agents, dim=dim, evaluate=evaluate,
        subgradient_bound=float(scale),
        evaluate_batch=evaluate_batch, aggregate_evaluate=aggregate_evaluate,
        name="linear_probe", params={"seed": seed, "scale": scale},
    )


def constant_stream(n_agents: int, dim: int = 1, value: float = 0.0) -> ObjectiveStream:
    """Constant costs; the oracle is exactly zero, leaving pure consensus."""

    def evaluate(agent: int, t: int, x: np.ndarray) -> float:
        return float(value)

    def evaluate_batch(agent: int, t: int, points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], float(value))

    def aggregate_evaluate(t: int, points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], float(value) * n_agents)

    return ObjectiveStream(
        n_agents=n_agents, dim=dim, evaluate=evaluate,
        subgradient_bound=0.0,
        evaluate_batch=evaluate_batch, aggregate_evaluate=aggregate_evaluate,
        name="constant", params={"value": value},
    )


def norm_stream(n_agents: int, dim: int = 1, scale: float = 1.0) -> ObjectiveStream:
    """Euclidean-norm costs scale * ||x||: convex, scale-Lipschitz, kinked at 0."""

    def evaluate(agent: int, t: int, x: np.ndarray) -> float:
        return float(scale * np.linalg.norm(np.asarray(x, dtype=float)))

    def evaluate_batch(agent: int, t: int, points: np.ndarray) -> np.ndarray:
        return scale * np.linalg.norm(points, axis=1)

    def aggregate_evaluate(t: int, points: np.ndarray) -> np.ndarray:
        return n_agents * scale * np.linalg.norm(points, axis=1)

    def analytic_minimizer(t: int) -> np.ndarray:
        return np.zeros(dim)

    return ObjectiveStream(
        n_agents=n_agents, dim=dim, evaluate=evaluate,
        analytic_minimizer=analytic_minimizer, subgradient_bound=float(scale),
        evaluate_batch=evaluate_batch, aggregate_evaluate=aggregate_evaluate,
        name="norm", params={"scale": scale},
    )


STREAM_REGISTRY: dict[str, Callable[..., ObjectiveStream]] = {
    "paper_quadratic": lambda n, dim, seed, **kw: paper_objective_stream(n, dim, coeff_seed=seed, **kw),
    "linear_probe": lambda n, dim, seed, **kw: linear_probe_stream(n, dim, seed=seed, **kw),
    "constant": lambda n, dim, seed, **kw: constant_stream(n, dim, **kw),
}


def make_stream(name: str, n_agents: int, dim: int, seed: int, **kwargs) -> ObjectiveStream:
    """Instantiate a registered stream by name."""
    try:
        factory = STREAM_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown stream {name!r}; registered: {sorted(STREAM_REGISTRY)}") from None
    return factory(n_agents, dim, seed, **kwargs)
