"""Canned, versioned experiment configurations and their artifacts.

Three experiments ship with the library:

* tracking + per-agent regret on a 10-agent random digraph,
* the agent-count sweep on rings (time-averaged regret vs N),
* a diagnostics bundle (smoothing checks, oracle moment checks, spectral
  report, residual-ratio study).

Every experiment writes CSV series plus a JSON metadata file that closes
over all seeds and parameters, so a run can be reproduced bit-for-bit from
its metadata alone.  Outputs land under out/<experiment>/<timestamp>/
unless an explicit directory is given.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algorithm import RunConfig, Trace, run
from .analysis import (
    RegretLedger,
    build_regret_ledger,
    consensus_curve,
    spectral_report,
    theta_over_gamma,
)
from .graph import delta_hat, equal_neighbor_weights, make_cycle, make_random_strongly_connected
from .oracle import (
    ObjectiveStream,
    OracleConfig,
    gradient_free_oracle,
    make_stream,
    norm_stream,
    smoothed_value_mc_stats,
)

__all__ = [
    "experiment_fig2_3",
    "experiment_fig4",
    "experiment_diagnostics",
    "TrackingExperimentResult",
    "AgentSweepResult",
    "DiagnosticsResult",
    "rerun_from_metadata",
    "sandwich_table",
    "unbiasedness_check",
    "second_moment_check",
    "quadratic_norm_stream",
]

SV_DEFAULTS = dict(delta=0.1, mu_hat=1e-4, gamma0=1.0, schedule_kind="inv_sqrt",
                   feasible_kind="box", feasible_lo=-5.0, feasible_hi=5.0,
                   dim=1, stream_name="paper_quadratic", weight_rule="equal_neighbor")
# Stand-in for the unspecified 10-agent topology: cycle backbone plus
# random extra edges, fixed seed, edge list echoed into metadata.
FIG1_GRAPH_SEED = 7
FIG1_EXTRA_EDGE_PROB = 0.3


def _out_dir(experiment: str, out_dir=None) -> Path:
    if out_dir is not None:
        path = Path(out_dir)
    else:
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
        path = Path("out") / experiment / stamp
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def rerun_from_metadata(meta_path) -> Trace:
    """Rebuild the run configuration recorded in a metadata file and rerun it."""
    meta = json.loads(Path(meta_path).read_text())
    return run(RunConfig.from_dict(meta["config"]))


@dataclass
class TrackingExperimentResult:
    trace: Trace
    ledger: RegretLedger
    out_dir: Path
    paths: dict = field(default_factory=dict)


def experiment_fig2_3(seed: int = 0, horizon: int = 5000, out_dir=None) -> TrackingExperimentResult:
    """Ten agents on a random strongly connected digraph tracking the moving
    minimizer; emits trajectory, regret, and consensus series."""
    directory = _out_dir("fig2_3", out_dir)
    config = RunConfig(n_agents=10, graph_kind="random", graph_seed=FIG1_GRAPH_SEED,
                       extra_edge_prob=FIG1_EXTRA_EDGE_PROB, horizon=horizon,
                       master_seed=seed, **SV_DEFAULTS)
    trace = run(config)
    stream = make_stream(config.stream_name, config.n_agents, config.dim, config.master_seed)
    ledger = build_regret_ledger(trace, stream)
    curves = consensus_curve(trace)

    paths = {}
    paths["trajectories"] = directory / "trajectories.csv"
    paths["trajectories"].write_text(trace.to_csv_text())

    t_axis = np.arange(1, trace.horizon + 1)
    regret_rows = []
    for t in t_axis:
        for i in range(trace.n_agents):
            regret_rows.append([t, i, ledger.regret_curve[t, i], ledger.regret_curve[t, i] / t])
    paths["regret"] = directory / "regret.csv"
    _write_csv(paths["regret"], ["t", "agent", "regret", "time_avg_regret"], regret_rows)

    cons_rows = []
    for t in range(trace.horizon + 1):
        aug = curves.spread_augmented[t] if curves.spread_augmented is not None else float("nan")
        cons_rows.append([t, curves.spread[t], aug])
    paths["consensus"] = directory / "consensus.csv"
    _write_csv(paths["consensus"], ["t", "spread", "spread_augmented"], cons_rows)

    meta = trace.metadata()
    meta["experiment"] = "fig2_3"
    meta["path_length"] = ledger.path_length_value
    meta["offline_cost"] = ledger.offline_cost
    meta["regret_final"] = ledger.regret.tolist()
    paths["metadata"] = directory / "run_meta.json"
    _write_json(paths["metadata"], meta)
    paths["plot_script"] = directory / "plot_figs.py"
    paths["plot_script"].write_text(_PLOT_SCRIPT)
    return TrackingExperimentResult(trace=trace, ledger=ledger, out_dir=directory, paths=paths)


@dataclass
class AgentSweepResult:
    agent_counts: tuple
    mean_time_avg: dict              # n -> (T,) curve over t = 1..T
    final_values: dict               # n -> value at T
    traces: dict                     # n -> Trace
    out_dir: Path
    paths: dict = field(default_factory=dict)


def experiment_fig4(seed: int = 0, agent_counts=(10, 50, 100, 200), horizon: int = 5000,
                    out_dir=None, ring_kind: str = "ring") -> AgentSweepResult:
    """Time-averaged regret versus network size on ring topologies.

    `ring_kind` selects "ring" (bidirectional, the default) or "cycle"
    (one-way).  One-way cycles make the surplus coupling spectrally unstable
    at the standard gain 0.1, which the run loop reports as a warning; the
    bidirectional ring reproduces the expected descending curves.  The same
    seed value is reused for every N (coefficient shapes differ per N, so
    streams are regenerated; the policy is recorded in metadata).
    """
    directory = _out_dir("fig4", out_dir)
    mean_curves, finals, traces = {}, {}, {}
    rows = []
    for n in agent_counts:
        config = RunConfig(n_agents=n, graph_kind=ring_kind, graph_seed=seed,
                           horizon=horizon, master_seed=seed,
                           record_surplus=False, record_oracle=False, **SV_DEFAULTS)
        trace = run(config)
        stream = make_stream(config.stream_name, n, config.dim, config.master_seed)
        ledger = build_regret_ledger(trace, stream)
        t_axis = np.arange(1, horizon + 1)
        curve = ledger.regret_curve[1:].mean(axis=1) / t_axis
        mean_curves[n] = curve
        finals[n] = float(curve[-1])
        traces[n] = trace
        for t, v in zip(t_axis, curve):
            rows.append([int(t), n, v])

    paths = {}
    paths["series"] = directory / "fig4_series.csv"
    _write_csv(paths["series"], ["t", "n_agents", "mean_time_avg_regret"], rows)
    meta = {
        "experiment": "fig4",
        "agent_counts": list(agent_counts),
        "ring_kind": ring_kind,
        "seed_policy": "same master seed per N; per-N streams regenerated",
        "configs": {str(n): traces[n].config.to_dict() for n in agent_counts},
        "final_values": {str(n): finals[n] for n in agent_counts},
        "warnings": {str(n): traces[n].warnings for n in agent_counts},
    }
    paths["metadata"] = directory / "run_meta.json"
    _write_json(paths["metadata"], meta)
    paths["plot_script"] = directory / "plot_figs.py"
    paths["plot_script"].write_text(_PLOT_SCRIPT)
    return AgentSweepResult(agent_counts=tuple(agent_counts), mean_time_avg=mean_curves,
                            final_values=finals, traces=traces, out_dir=directory, paths=paths)


def quadratic_norm_stream(dim: int) -> ObjectiveStream:
    """Single-agent squared-norm cost ||x||^2, used by the moment diagnostics."""
    return ObjectiveStream(
        n_agents=1, dim=dim,
        evaluate=lambda agent, t, x: float(np.asarray(x) @ np.asarray(x)),
        evaluate_batch=lambda agent, t, pts: (pts ** 2).sum(axis=1),
        analytic_minimizer=lambda t: np.zeros(dim),
        subgradient_bound=None, name="squared_norm",
    )


def sandwich_table(n_points: int = 20, n_samples: int = 100_000, mu: float = 0.05,
                   seed: int = 2024, x_lo: float = -2.0, x_hi: float = 2.0) -> list[dict]:
    """Smoothing sandwich check rows on a 1-D unit-Lipschitz convex stream.

    Each row compares the Monte Carlo smoothed value against the bracket
    [f(x) - 3 se, f(x) + sqrt(p) mu D + 3 se].
    """
    stream = norm_stream(1, dim=1, scale=1.0)
    d_bound = stream.subgradient_bound
    rng = np.random.default_rng(seed)
    points = rng.uniform(x_lo, x_hi, n_points)
    rows = []
    for k, xv in enumerate(points):
        x = np.array([xv])
        f_val = stream.evaluate(0, 0, x)
        est, se = smoothed_value_mc_stats(stream, 0, 0, x, mu, n_samples, seed=seed + 1 + k)
        upper = f_val + math.sqrt(stream.dim) * mu * d_bound
        rows.append({
            "x": float(xv), "f": f_val, "f_mu_est": est, "stderr": se,
            "lower": f_val - 3.0 * se, "upper": upper + 3.0 * se,
            "within": bool(f_val - 3.0 * se <= est <= upper + 3.0 * se),
        })
    return rows


def _oracle_mean(stream: ObjectiveStream, cfg: OracleConfig, x: np.ndarray,
                 n_draws: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Empirical mean of oracle draws at x over t = 0..n-1, with per-coordinate
    standard errors and the mean squared norm."""
    total = np.zeros(cfg.dim)
    total_sq = np.zeros(cfg.dim)
    norm_sq = 0.0
    for t in range(n_draws):
        g = gradient_free_oracle(stream, cfg, 0, t, x)
        total += g
        total_sq += g * g
        norm_sq += g @ g
    mean = total / n_draws
    var = total_sq / n_draws - mean ** 2
    stderr = np.sqrt(np.maximum(var, 0.0) / n_draws)
    return mean, stderr, norm_sq / n_draws


def unbiasedness_check(dim: int = 3, n_points: int = 5, n_draws: int = 100_000,
                       mu: float = 0.01, fd_step: float = 0.1, fd_samples: int = 100_000,
                       seed: int = 11) -> list[dict]:
    """Oracle-mean versus smoothed-gradient rows for the squared-norm cost.

    The reference gradient is a central finite difference of the Monte Carlo
    smoothed value, computed with seeds independent of the oracle stream.
    """
    stream = quadratic_norm_stream(dim)
    cfg = OracleConfig.uniform(1, mu, dim, rng_seed=seed)
    rng = np.random.default_rng(seed + 1)
    rows = []
    for k in range(n_points):
        x = rng.uniform(-1.0, 1.0, dim)
        mean, stderr, _ = _oracle_mean(stream, cfg, x, n_draws)
        fd = np.empty(dim)
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = fd_step
            hi, _ = smoothed_value_mc_stats(stream, 0, 0, x + e, mu, fd_samples,
                                            seed=seed + 1000 + 2 * (k * dim + j))
            lo, _ = smoothed_value_mc_stats(stream, 0, 0, x - e, mu, fd_samples,
                                            seed=seed + 1001 + 2 * (k * dim + j))
            fd[j] = (hi - lo) / (2.0 * fd_step)
        sigmas = np.abs(mean - fd) / np.maximum(stderr, 1e-300)
        rows.append({
            "x": x.tolist(), "oracle_mean": mean.tolist(), "fd_gradient": fd.tolist(),
            "stderr": stderr.tolist(), "max_sigmas": float(sigmas.max()),
            "within_4_sigma": bool((sigmas <= 4.0).all()),
        })
    return rows


def second_moment_check(dims=(1, 2, 5), n_draws: int = 100_000, mu: float = 1e-3,
                        seed: int = 5) -> list[dict]:
    """Mean squared oracle norm against the (p+4)^2 D^2 ceiling on a
    unit-Lipschitz stream, one row per dimension."""
    rows = []
    for p in dims:
        stream = norm_stream(1, dim=p, scale=1.0)
        cfg = OracleConfig.uniform(1, mu, p, rng_seed=seed + p)
        rng = np.random.default_rng(seed + 100 + p)
        x = rng.uniform(-1.0, 1.0, p)
        _, _, mean_norm_sq = _oracle_mean(stream, cfg, x, n_draws)
        ceiling = (p + 4) ** 2 * stream.subgradient_bound ** 2
        rows.append({
            "dim": p, "mean_norm_sq": float(mean_norm_sq), "ceiling": float(ceiling),
            "within": bool(mean_norm_sq <= ceiling),
        })
    return rows


@dataclass
class DiagnosticsResult:
    sandwich: list
    unbiasedness: list
    second_moment: list
    spectral: dict                    # topology name -> list[SpectralRow]
    delta_hat_values: dict            # topology name -> float
    theta_ratio_max: float
    theta_ratio_final_decade_span: float
    out_dir: Path
    paths: dict = field(default_factory=dict)


def experiment_diagnostics(seed: int = 0, horizon: int = 5000, n_samples: int = 100_000,
                           out_dir=None) -> DiagnosticsResult:
    """Property-study bundle: smoothing and oracle moment tables, spectral
    reports with the conservative gain bound per topology, and the
    residual-over-step-size study along a full tracking run."""
    directory = _out_dir("diagnostics", out_dir)
    sandwich = sandwich_table(n_samples=n_samples, seed=seed + 2024)
    unbiased = unbiasedness_check(n_draws=n_samples, fd_samples=n_samples, seed=seed + 11)
    second = second_moment_check(n_draws=n_samples, seed=seed + 5)

    topologies = {
        "cycle_10": equal_neighbor_weights(make_cycle(10)),
        "random_10": equal_neighbor_weights(
            make_random_strongly_connected(10, FIG1_EXTRA_EDGE_PROB, FIG1_GRAPH_SEED)),
    }
    grid = [0.01, 0.05, 0.1, 0.2]
    spectral = {name: spectral_report(wp, grid) for name, wp in topologies.items()}
    dh_values = {name: delta_hat(wp) for name, wp in topologies.items()}

    config = RunConfig(n_agents=10, graph_kind="random", graph_seed=FIG1_GRAPH_SEED,
                       extra_edge_prob=FIG1_EXTRA_EDGE_PROB, horizon=horizon,
                       master_seed=seed, **SV_DEFAULTS)
    trace = run(config)
    ratio = theta_over_gamma(trace)
    lo_t, hi_t = max(10, horizon // 10), horizon
    running_max = np.maximum.accumulate(ratio)
    span = float(running_max[hi_t - 1] / running_max[lo_t - 1])
    ratio_max = float(ratio[9:horizon].max())

    paths = {}
    paths["sandwich"] = directory / "sandwich.csv"
    _write_csv(paths["sandwich"],
               ["x", "f", "f_mu_est", "stderr", "lower", "upper", "within"],
               [[r["x"], r["f"], r["f_mu_est"], r["stderr"], r["lower"], r["upper"],
                 int(r["within"])] for r in sandwich])
    paths["spectral"] = directory / "spectral.csv"
    spec_rows = []
    for name, report in spectral.items():
        for row in report:
            spec_rows.append([name, row.delta, row.delta_hat_value,
                              row.lambda_fit if row.lambda_fit is not None else float("nan"),
                              row.c_fit if row.c_fit is not None else float("nan"),
                              row.r_squared if row.r_squared is not None else float("nan"),
                              int(row.geometric)])
    _write_csv(paths["spectral"],
               ["topology", "delta", "delta_hat", "lambda_fit", "c_fit", "r_squared", "geometric"],
               spec_rows)
    summary = {
        "experiment": "diagnostics",
        "seed": seed,
        "delta_hat": dh_values,
        "sandwich_all_within": all(r["within"] for r in sandwich),
        "unbiasedness": unbiased,
        "second_moment": second,
        "theta_ratio_max": ratio_max,
        "theta_ratio_running_max_final_decade_span": span,
        "run_config": config.to_dict(),
    }
    paths["summary"] = directory / "diagnostics.json"
    _write_json(paths["summary"], summary)
    return DiagnosticsResult(
        sandwich=sandwich, unbiasedness=unbiased, second_moment=second,
        spectral=spectral, delta_hat_values=dh_values,
        theta_ratio_max=ratio_max, theta_ratio_final_decade_span=span,
        out_dir=directory, paths=paths,
    )


_PLOT_SCRIPT = '''"""Render figures from the CSV series in this directory.

Run with any matplotlib-equipped interpreter:  python plot_figs.py
"""
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).parent


def load(name):
    with open(here / name) as fh:
        rows = list(csv.DictReader(fh))
    return rows


if (here / "trajectories.csv").exists():
    rows = load("trajectories.csv")
    agents = sorted({int(r["agent"]) for r in rows})
    fig, ax = plt.subplots()
    for i in agents:
        ts = [int(r["t"]) for r in rows if int(r["agent"]) == i]
        xs = [float(r["x_0"]) for r in rows if int(r["agent"]) == i]
        ax.plot(ts, xs, lw=0.8)
    if "x_star_0" in rows[0]:
        ts = sorted({int(r["t"]) for r in rows})
        star = {int(r["t"]): float(r["x_star_0"]) for r in rows}
        ax.plot(ts, [star[t] for t in ts], "k--", lw=1.5, label="offline optimum")
        ax.legend()
    ax.set_xlabel("t"); ax.set_ylabel("decision")
    fig.savefig(here / "trajectories.png", dpi=150)

if (here / "regret.csv").exists():
    rows = load("regret.csv")
    agents = sorted({int(r["agent"]) for r in rows})
    fig, ax = plt.subplots()
    for i in agents:
        ts = [int(r["t"]) for r in rows if int(r["agent"]) == i]
        vs = [float(r["time_avg_regret"]) for r in rows if int(r["agent"]) == i]
        ax.plot(ts, vs, lw=0.8)
    ax.set_xlabel("t"); ax.set_ylabel("time-averaged regret")
    fig.savefig(here / "time_avg_regret.png", dpi=150)

if (here / "fig4_series.csv").exists():
    rows = load("fig4_series.csv")
    counts = sorted({int(r["n_agents"]) for r in rows})
    fig, ax = plt.subplots()
    for n in counts:
        ts = [int(r["t"]) for r in rows if int(r["n_agents"]) == n]
        vs = [float(r["mean_time_avg_regret"]) for r in rows if int(r["n_agents"]) == n]
        ax.plot(ts, vs, label=f"N={n}")
    ax.set_xlabel("t"); ax.set_ylabel("mean time-averaged regret"); ax.legend()
    fig.savefig(here / "agent_sweep.png", dpi=150)

print("figures written to", here)
'''
