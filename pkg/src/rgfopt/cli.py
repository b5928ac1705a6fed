"""Command-line entry point: single runs, canned experiments, spectral
reports, and diagnostics.

Exit codes: 0 success, 2 argument/config parse failure, 3 config
validation failure, 4 runtime failure.  Errors are emitted as a single
JSON object on stderr so scripts can consume them.  The environment
variable RGF_SEED supplies a default seed when --seed is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .algorithm import ConfigError, RunConfig, SimulationError, make_graph, run
from .analysis import spectral_report
from .experiments import experiment_diagnostics, experiment_fig2_3, experiment_fig4
from .graph import GraphError, equal_neighbor_weights
from .oracle import OracleError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _default_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("RGF_SEED")
    if env is not None:
        return int(env)
    return 0


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgfopt",
                                     description="gradient-free distributed online optimization simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured run")
    p_run.add_argument("--config", required=True, help="path to a JSON run configuration")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field after parsing (repeatable)")
    p_run.add_argument("--seed", type=int, default=None, help="master seed override")
    p_run.add_argument("--out", default=None, help="output directory")

    p_exp = sub.add_parser("experiment", help="run a canned experiment")
    p_exp.add_argument("name", choices=["fig2_3", "fig4", "diagnostics"])
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--out", default=None)
    p_exp.add_argument("--horizon", type=int, default=5000)
    p_exp.add_argument("--samples", type=int, default=100_000,
                       help="Monte Carlo draws used by diagnostics")

    p_spec = sub.add_parser("spectral", help="emit the spectral convergence report")
    p_spec.add_argument("--graph", choices=["cycle", "ring", "complete", "random"], default="cycle")
    p_spec.add_argument("--n", type=int, default=10)
    p_spec.add_argument("--graph-seed", type=int, default=7)
    p_spec.add_argument("--delta-grid", default="0.01,0.05,0.1,0.2",
                        help="comma-separated gain values")
    p_spec.add_argument("--out", default=None, help="CSV output path (default stdout)")

    p_diag = sub.add_parser("diagnose", help="alias for `experiment diagnostics`")
    p_diag.add_argument("--seed", type=int, default=None)
    p_diag.add_argument("--out", default=None)
    p_diag.add_argument("--horizon", type=int, default=5000)
    p_diag.add_argument("--samples", type=int, default=100_000)
    return parser


def _cmd_run(args) -> int:
    config_path = Path(args.config)
    try:
        data = json.loads(config_path.read_text())
    except FileNotFoundError:
        return _fail("config", f"config file not found: {config_path}", EXIT_PARSE)
    except json.JSONDecodeError as exc:
        return _fail("config", f"invalid JSON in {config_path}: {exc}", EXIT_PARSE)

    try:
        for item in args.set:
            key, value = _parse_override(item)
            data[key] = value
        if args.seed is not None or "master_seed" not in data:
            data["master_seed"] = _default_seed(args.seed)
        config = RunConfig.from_dict(data)
        config.validate()
    except (ConfigError, TypeError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)

    try:
        trace = run(config)
        out = Path(args.out) if args.out else Path("out") / "run"
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectories.csv").write_text(trace.to_csv_text())
        meta = trace.metadata()
        meta["effective_config"] = config.to_dict()
        (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        print(f"run complete: T={trace.horizon}, N={trace.n_agents}, outputs in {out}")
        return EXIT_OK
    except (ConfigError, GraphError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)
    except (SimulationError, OracleError, OSError) as exc:
        return _fail("runtime", str(exc), EXIT_RUNTIME)


def _cmd_experiment(args) -> int:
    seed = _default_seed(args.seed)
    try:
        if args.name == "fig2_3":
            result = experiment_fig2_3(seed=seed, horizon=args.horizon, out_dir=args.out)
        elif args.name == "fig4":
            result = experiment_fig4(seed=seed, horizon=args.horizon, out_dir=args.out)
        else:
            result = experiment_diagnostics(seed=seed, horizon=args.horizon,
                                            n_samples=args.samples, out_dir=args.out)
        print(f"experiment {args.name} complete: outputs in {result.out_dir}")
        return EXIT_OK
    except (ConfigError, GraphError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)
    except (SimulationError, OracleError, OSError) as exc:
        return _fail("runtime", str(exc), EXIT_RUNTIME)


def _cmd_spectral(args) -> int:
    try:
        grid = [float(tok) for tok in args.delta_grid.split(",") if tok.strip()]
        if not grid:
            raise ConfigError("empty delta grid")
    except ValueError as exc:
        return _fail("config", f"bad delta grid {args.delta_grid!r}: {exc}", EXIT_PARSE)
    try:
        g = make_graph(args.graph, args.n, seed=args.graph_seed)
        wp = equal_neighbor_weights(g)
        rows = spectral_report(wp, grid)
    except (ConfigError, GraphError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)

    header = "delta,delta_hat,lambda_fit,c_fit,r_squared,geometric,error"
    lines = [header]
    for r in rows:
        lines.append(",".join([
            repr(r.delta), repr(r.delta_hat_value),
            repr(r.lambda_fit) if r.lambda_fit is not None else "",
            repr(r.c_fit) if r.c_fit is not None else "",
            repr(r.r_squared) if r.r_squared is not None else "",
            str(int(r.geometric)),
            r.error or "",
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            return _fail("runtime", str(exc), EXIT_RUNTIME)
        print(f"spectral report written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; normalize the code
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK

    if args.command == "run":
        return _cmd_run(args)
    if args.command == "experiment":
        return _cmd_experiment(args)
    if args.command == "spectral":
        return _cmd_spectral(args)
    if args.command == "diagnose":
        args.name = "diagnostics"
        return _cmd_experiment(args)
    return _fail("usage", f"unknown command {args.command!r}", EXIT_PARSE)


if __name__ == "__main__":
    sys.exit(main())
