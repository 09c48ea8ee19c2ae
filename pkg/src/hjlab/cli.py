"""Command-line driver: run, sweep, exponents, verify, fit.

Exit codes: 0 success, 1 a check or criterion failed, 2 configuration error,
3 solver abort. Sweep rows run concurrently (HJLAB_THREADS caps the pool);
every artifact write is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .exponents import exponent_table
from .harness import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_SOLVER_ABORT,
    execute_config,
    read_trace_csv,
)
from .ledger import DegenerateFitError, fit_loglog
from .verify import CRITERIA, run_all

__all__ = ["main", "entry"]


def _load_validated(path: str) -> ExperimentConfig:
    cfg = load_config(path)
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _load_validated(args.config)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = args.output or cfg.output_dir
    result = execute_config(cfg, out_dir)
    for outcome in result.outcomes:
        status = "PASS" if outcome.passed else "FAIL"
        print(f"[{status}] {outcome.name}")
    if result.exit_code == EXIT_SOLVER_ABORT:
        print("solver aborted; see report_abort.json", file=sys.stderr)
    return result.exit_code


def _set_config_value(cfg: ExperimentConfig, key: str, value: float) -> ExperimentConfig:
    head, _, rest = key.partition(".")
    if head == "spec":
        from .problem import spec_from_dict, spec_to_dict

        d = spec_to_dict(cfg.spec)
        if rest not in d:
            raise ConfigError(f"unknown spec field {rest!r}")
        d[rest] = type(d[rest])(value) if not isinstance(d[rest], str) else value
        return dataclasses.replace(cfg, spec=spec_from_dict(d))
    if head == "datum":
        if not hasattr(cfg.datum, rest):
            raise ConfigError(f"unknown datum field {rest!r}")
        return dataclasses.replace(cfg, datum=dataclasses.replace(cfg.datum, **{rest: value}))
    if head == "control":
        if not hasattr(cfg.control, rest):
            raise ConfigError(f"unknown control field {rest!r}")
        return dataclasses.replace(cfg, control=dataclasses.replace(cfg.control, **{rest: value}))
    raise ConfigError(f"sweep axis must start with spec., datum. or control. (got {key!r})")


def cmd_sweep(args) -> int:
    try:
        cfg = _load_validated(args.config)
        values = [float(v) for v in args.values]
    except (ConfigError, OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if not values:
        print("config error: empty sweep value list", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    out_root = Path(args.output or cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    def one(idx_value):
        idx, value = idx_value
        try:
            row_cfg = _set_config_value(cfg, args.axis, value)
        except ConfigError as e:
            return idx, value, EXIT_CONFIG_ERROR, [], str(e)
        row_dir = out_root / f"row_{idx:03d}"
        res = execute_config(row_cfg, row_dir)
        return idx, value, res.exit_code, res.outcomes, ""

    workers = int(os.environ.get("HJLAB_THREADS", "0")) or min(4, len(values))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = sorted(pool.map(one, enumerate(values)), key=lambda r: r[0])

    lines = ["row,value,exit,checks"]
    any_fail = False
    for idx, value, code, outcomes, err in rows:
        any_fail = any_fail or code != EXIT_OK
        summary = ";".join(f"{o.name}={'pass' if o.passed else 'fail'}" for o in outcomes) or err
        lines.append(f"{idx},{value!r},{code},{summary}")
        print(f"row {idx}: {args.axis}={value:g} -> exit {code} {summary}")
    (out_root / "summary.csv").write_text("\n".join(lines) + "\n")
    return EXIT_CHECK_FAILED if any_fail else EXIT_OK


def cmd_exponents(args) -> int:
    try:
        table = exponent_table(args.N, args.q, args.p, getattr(args, "lambda"), args.r)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.csv:
        Path(args.csv).write_text(table.to_csv())
    print(table.to_text(), end="")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        cols = read_trace_csv(Path(args.trace))
    except (OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.norm not in cols:
        print(f"config error: column {args.norm!r} not in trace "
              f"(have {sorted(cols)})", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        fit = fit_loglog(cols["t"], cols[args.norm], (args.window[0], args.window[1]))
    except DegenerateFitError as e:
        print(f"degenerate fit: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"slope {fit.slope!r}")
    print(f"intercept {fit.intercept!r}")
    print(f"r_squared {fit.r_squared!r}")
    print(f"samples {fit.n_samples}")
    return EXIT_OK


def cmd_verify(args) -> int:
    overrides = {}
    for item in args.set_tolerance or []:
        name, _, value = item.partition("=")
        if name not in CRITERIA:
            print(f"config error: unknown criterion {name!r}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        overrides[name] = float(value)
    results = run_all(only=args.only, overrides=overrides)
    if not results:
        print(f"config error: no criterion matches {args.only!r}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    width = max(len(r.name) for r in results)
    failed = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name.ljust(width)}  {r.measured}  "
              f"(expected: {r.expected}; tol: {r.tolerance}; {r.seconds:.1f}s)")
        if not r.passed:
            failed.append(r.name)
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_CHECK_FAILED
    print(f"all {len(results)} criteria passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjlab",
        description="Finite-difference lab for gradient-absorption diffusion equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a key=value or JSON config")
    p_run.add_argument("--output", help="override the output directory")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config across an axis of values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("axis", help="dotted numeric config key, e.g. spec.q")
    p_sweep.add_argument("values", nargs="*", help="values for the axis")
    p_sweep.add_argument("--output", help="override the output directory")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_exp = sub.add_parser("exponents", help="print the exponent table")
    p_exp.add_argument("--N", type=int, default=1)
    p_exp.add_argument("--q", type=float, default=1.5)
    p_exp.add_argument("--p", type=float, default=2.0)
    p_exp.add_argument("--lambda", type=float, default=0.0, dest="lambda")
    p_exp.add_argument("--r", type=float, action="append", default=None)
    p_exp.add_argument("--csv", help="also write the table as CSV to this path")
    p_exp.set_defaults(fn=cmd_exponents)

    p_fit = sub.add_parser("fit", help="fit a power law to a trace CSV column")
    p_fit.add_argument("trace")
    p_fit.add_argument("--norm", default="sup")
    p_fit.add_argument("--window", type=float, nargs=2, required=True, metavar=("TA", "TB"))
    p_fit.set_defaults(fn=cmd_fit)

    p_ver = sub.add_parser("verify", help="run the pinned verification suite")
    p_ver.add_argument("--only", help="run only criteria whose name contains this substring")
    p_ver.add_argument("--set-tolerance", action="append", metavar="NAME=VALUE",
                       help="override one criterion tolerance (self-test hook)")
    p_ver.set_defaults(fn=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "exponents" and args.r is None:
        args.r = [1.0, 2.0]
    return args.fn(args)


def entry() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entry()
