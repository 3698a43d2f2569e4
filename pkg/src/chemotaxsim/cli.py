"""Command line interface.

Subcommands:
  run <config> [key=value ...]       single simulation, outputs in run.outdir
  sweep <config> --axis k=v1,v2,...  cartesian parameter sweep
  regimes --chi --mu --a-inf         threshold / window verdict as JSON
  check                              built-in verification battery

Exit codes: 0 success, 1 battery or flag failure, 2 config error,
3 numerical trigger, 4 solver failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import engine
from .errors import (ConfigError, InfeasiblePlanError, ParameterError,
                     SimulationError, ThresholdNotMetError)
from .regimes import beta_window, boundedness_threshold, lp_parameter_plan

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_TRIGGER = 3
EXIT_SOLVER = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemotaxsim",
                                     description="Finite-volume chemotaxis simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation from a config file")
    p_run.add_argument("config", help="path to key=value config file")
    p_run.add_argument("overrides", nargs="*", metavar="key=value",
                       help="config overrides, e.g. model.chi=2.0 "
                            "(place before any -- options)")
    p_run.add_argument("--outdir", help="output directory (overrides run.outdir)")

    p_sweep = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("overrides", nargs="*", metavar="key=value")
    p_sweep.add_argument("--axis", action="append", required=True,
                         metavar="name=v1,v2,...",
                         help="axis over chi, a_scale, b_scale or mu; repeatable")
    p_sweep.add_argument("--outdir", help="output directory (overrides run.outdir)")
    p_sweep.add_argument("--workers", type=int, default=None)

    p_reg = sub.add_parser("regimes", help="threshold verdict and exponent windows")
    p_reg.add_argument("--chi", type=float, required=True)
    p_reg.add_argument("--mu", type=float, required=True)
    p_reg.add_argument("--a-inf", type=float, required=True, dest="a_inf")
    p_reg.add_argument("--plan", action="store_true",
                       help="also attempt the L^p exponent plan construction")
    p_reg.add_argument("--plan-c", type=float, default=1.5)
    p_reg.add_argument("--plan-h-frac", type=float, default=0.9)
    p_reg.add_argument("--plan-alpha-gap", type=float, default=1e-3)

    sub.add_parser("check", help="run the built-in verification battery")
    return parser


def _cmd_run(args) -> int:
    config = engine.load_config(args.config, args.overrides)
    outdir = args.outdir or config.outdir or "out"
    outcome = engine.run(config, outdir=outdir)
    print(json.dumps({
        "verdict": outcome.verdict,
        "trigger": outcome.trigger,
        "t_reached": outcome.t_reached,
        "steps": outcome.steps,
        "peak_max_u": outcome.peak_max_u,
        "min_min_v": outcome.min_min_v,
        "diagnostics": outcome.diagnostics_path,
        "summary": outcome.summary_path,
    }, indent=2))
    if outcome.verdict == engine.VERDICT_BLOWUP:
        return EXIT_TRIGGER
    if outcome.verdict == engine.VERDICT_SOLVER:
        return EXIT_SOLVER
    return EXIT_OK


def _parse_axes(specs: list[str]) -> list[tuple[str, list[float]]]:
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"axis must look like name=v1,v2,..., got {spec!r}")
        name, values = spec.split("=", 1)
        axes.append((name.strip(), [float(v) for v in values.split(",")]))
    return axes


def _cmd_sweep(args) -> int:
    config = engine.load_config(args.config, args.overrides)
    outdir = args.outdir or config.outdir or "out"
    result = engine.sweep(config, _parse_axes(args.axis), outdir=outdir,
                          workers=args.workers)
    triggered = sum(1 for row in result.rows if row["trigger"])
    failed = sum(1 for row in result.rows if row["verdict"] == engine.VERDICT_SOLVER)
    print(json.dumps({
        "cells": len(result.rows),
        "triggers": triggered,
        "solver_failures": failed,
        "table": result.csv_path,
    }, indent=2))
    if failed:
        return EXIT_SOLVER
    if triggered:
        return EXIT_TRIGGER
    return EXIT_OK


def _cmd_regimes(args) -> int:
    verdict = boundedness_threshold(args.chi, args.mu, args.a_inf)
    payload: dict = {"threshold": dataclasses.asdict(verdict)}
    ok = verdict.satisfied
    if verdict.satisfied:
        window = beta_window(args.chi, args.mu, args.a_inf)
        payload["beta_window"] = dataclasses.asdict(window)
    else:
        payload["beta_window"] = None
    if args.plan:
        try:
            plan = lp_parameter_plan(args.plan_c, args.plan_h_frac, args.plan_alpha_gap)
            payload["lp_plan"] = dataclasses.asdict(plan)
            ok = ok and plan.all_flags
        except (InfeasiblePlanError, ParameterError, ThresholdNotMetError) as err:
            payload["lp_plan"] = {
                "infeasible": True,
                "message": str(err),
                "p_star": getattr(err, "p_star", None),
                "p_star_upper": getattr(err, "p_star_upper", None),
            }
            ok = False
    print(json.dumps(payload, indent=2))
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_check() -> int:
    report = engine.self_check()
    for item in report.items:
        print(f"[{'PASS' if item.passed else 'FAIL'}] {item.name}: {item.detail}")
    return EXIT_OK if report.all_passed else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "regimes":
            return _cmd_regimes(args)
        return _cmd_check()
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
