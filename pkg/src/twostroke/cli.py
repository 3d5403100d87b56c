"""Command-line front end.

Subcommands:

  simulate     run a transient and emit the per-cycle ledger
  limit-cycle  solve the steady cycle and emit a one-row report
  sweep        solve a 1- or 2-axis parameter grid of limit cycles
  analytic     two-qubit closed-form trajectory and steady state
  verify       run the invariant suite against one spec

Exit codes: 0 on success, 1 on configuration errors, 2 on solver
failures in single-run modes.  Sweeps always exit 0; per-point failures
live in the status column.  ``--plot`` renders a PNG next to ``--out``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import analytic
from .engine import load_config, spec_from_json
from .errors import (
    ConsistencyError,
    ConvergenceError,
    DegenerateFixedPointError,
    TwoStrokeError,
)
from .simulate import (
    find_limit_cycle,
    ground_start,
    ledger_to_csv,
    ledger_to_json,
    report_to_csv,
    report_to_json,
    run_cycles,
    thermal_start,
)
from .sweep import (
    emit,
    plan_from_config,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
    verify,
    verify_to_csv,
    verify_to_json,
)

_SOLVER_ERRORS = (ConvergenceError, DegenerateFixedPointError, ConsistencyError)


def _png_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".png"


def _check_plot(args) -> None:
    if getattr(args, "plot", False) and args.out is None:
        raise TwoStrokeError("--plot needs --out to name the figure file")


def _initial_state_doc(doc: dict):
    state = doc.get("initial_state", "thermal")
    if state in ("thermal", "ground"):
        return state, None
    if isinstance(state, dict):
        keys = set(state)
        if keys == {"kind", "temperature"} and state.get("kind") == "thermal":
            t = state["temperature"]
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                raise TwoStrokeError("initial_state.temperature must be a number")
            return "thermal", float(t)
    raise TwoStrokeError(
        "initial_state must be 'thermal', 'ground', or "
        '{"kind": "thermal", "temperature": T}'
    )


def _start_state(doc: dict, spec):
    kind, temperature = _initial_state_doc(doc)
    if kind == "ground":
        return ground_start(spec)
    return thermal_start(spec, temperature)


def _cmd_simulate(args) -> int:
    _check_plot(args)
    doc = load_config(args.config)
    spec = spec_from_json(doc)
    ledger = run_cycles(_start_state(doc, spec), spec, args.cycles)
    text = ledger_to_csv(ledger) if args.format == "csv" else ledger_to_json(ledger)
    emit(text, args.out)
    if args.plot:
        from .plots import plot_ledger

        plot_ledger(ledger, _png_path(args.out))
    return 0


def _cmd_limit_cycle(args) -> int:
    doc = load_config(args.config)
    spec = spec_from_json(doc)
    report = find_limit_cycle(
        spec, method=args.method, tol=args.tol, max_cycles=args.cycles
    )
    text = report_to_csv(report) if args.format == "csv" else report_to_json(report)
    emit(text, args.out)
    return 0


def _cmd_sweep(args) -> int:
    _check_plot(args)
    doc = load_config(args.config)
    spec = spec_from_json(doc)
    plan = plan_from_config(doc, spec)
    result = run_sweep(
        plan, method=args.method, tol=args.tol, max_cycles=args.cycles, jobs=args.jobs
    )
    text = sweep_to_csv(result) if args.format == "csv" else sweep_to_json(result)
    emit(text, args.out)
    if args.plot:
        from .plots import plot_sweep

        plot_sweep(result, _png_path(args.out))
    return 0


def _analytic_overrides(doc: dict) -> dict:
    block = doc.get("overrides")
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise TwoStrokeError("overrides must be an object")
    allowed = {"lambda": "lam", "p": "p", "eta": "eta", "xi": "xi"}
    out = {}
    for key, value in block.items():
        if key not in allowed:
            raise TwoStrokeError(f"unknown override {key!r}; allowed: lambda, p, eta, xi")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TwoStrokeError(f"override {key!r} must be a number")
        out[allowed[key]] = float(value)
    return out


def _analytic_start(doc: dict, params) -> analytic.ObservableVector:
    kind, temperature = _initial_state_doc(doc)
    if kind == "ground":
        return analytic.ObservableVector(-1.0, -1.0, 0.0, 0.0)
    t = params.T_C if temperature is None else temperature
    z1 = 2.0 / (math.exp(params.omega_1 / t) + 1.0) - 1.0
    z2 = 2.0 / (math.exp(params.omega_2 / t) + 1.0) - 1.0
    return analytic.ObservableVector(z1, z2, 0.0, 0.0)


def _params_doc(params) -> dict:
    return {
        "omega_1": params.omega_1,
        "omega_2": params.omega_2,
        "g": params.g,
        "tau_q": params.tau_q,
        "tau_w": params.tau_w,
        "T_C": params.T_C,
        "T_H": params.T_H,
        "lambda": params.lam,
        "p": params.p,
        "eta": params.eta_w,
        "xi": params.xi,
        "theta": params.theta,
        "omega_r": params.omega_r,
        "f_C": params.f_C,
        "f_H": params.f_H,
        "Z1_th": params.Z1_th,
        "Z2_th": params.Z2_th,
        "identity_residual": params.identity_residual,
    }


def _cmd_analytic(args) -> int:
    _check_plot(args)
    doc = load_config(args.config)
    spec = spec_from_json(doc)
    params = analytic.from_engine_spec(spec, **_analytic_overrides(doc))
    maps = analytic.build_affine_maps(params)
    rows = analytic.trajectory(_analytic_start(doc, params), args.cycles, maps)
    if args.format == "csv":
        text = analytic.trajectory_to_csv(rows)
    else:
        x_star, xt_star = analytic.steady_state(maps)
        q_c, q_h, w = analytic.thermo_from_states(x_star, xt_star, x_star, params)
        doc_out = {
            "params": _params_doc(params),
            "steady_state": {
                "x": dict(x_star._asdict()),
                "x_tilde": dict(xt_star._asdict()),
            },
            "thermo": {
                "Q_C": q_c,
                "Q_H": q_h,
                "W": w,
                "power": w / (params.tau_q + params.tau_w),
                "efficiency": (w / q_h) if abs(q_h) > 1e-12 else None,
            },
            "work_closed_form": analytic.work_closed_form(params),
            "relaxation_rate": analytic.relaxation_rate(maps),
            "trajectory": [
                dict(zip(analytic.TRAJECTORY_COLUMNS, row))
                for row in [
                    [n, x.Z1, xt.Z1, x.Z2, xt.Z2, x.S, xt.S, x.A, xt.A]
                    for n, (x, xt) in enumerate(rows)
                ]
            ],
        }
        from .serialize import dumps_json

        text = dumps_json(doc_out)
    emit(text, args.out)
    if args.plot:
        from .plots import plot_trajectory

        plot_trajectory(rows, _png_path(args.out))
    return 0


def _cmd_verify(args) -> int:
    doc = load_config(args.config)
    spec = spec_from_json(doc)
    rows = verify(spec, cycles=args.cycles, method=args.method, tol=args.tol)
    text = verify_to_csv(rows) if args.format == "csv" else verify_to_json(rows)
    emit(text, args.out)
    return 0


def _add_common(sub, *, cycles: int, method: bool = False, jobs: bool = False, plot: bool = False):
    sub.add_argument("--config", required=True, help="JSON engine spec")
    sub.add_argument(
        "--cycles", type=int, default=cycles, help=f"cycle budget (default {cycles})"
    )
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="output format"
    )
    if method:
        sub.add_argument(
            "--method",
            choices=("iterate", "spectral"),
            default="iterate",
            help="limit-cycle solver",
        )
        sub.add_argument(
            "--tol", type=float, default=1e-12, help="convergence tolerance"
        )
    if jobs:
        sub.add_argument(
            "--jobs", type=int, default=1, help="worker processes for grid points"
        )
    if plot:
        sub.add_argument(
            "--plot",
            action="store_true",
            help="render a PNG figure next to --out",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twostroke",
        description="Stroboscopic two-stroke engine simulator on qudit chains.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="transient per-cycle ledger")
    _add_common(sim, cycles=50, plot=True)
    sim.set_defaults(func=_cmd_simulate)

    lc = subs.add_parser("limit-cycle", help="steady-cycle report")
    _add_common(lc, cycles=100_000, method=True)
    lc.set_defaults(func=_cmd_limit_cycle)

    swp = subs.add_parser("sweep", help="parameter-grid limit cycles")
    _add_common(swp, cycles=100_000, method=True, jobs=True, plot=True)
    swp.set_defaults(func=_cmd_sweep)

    ana = subs.add_parser("analytic", help="two-qubit closed-form dynamics")
    _add_common(ana, cycles=50, plot=True)
    ana.set_defaults(func=_cmd_analytic)

    ver = subs.add_parser("verify", help="invariant suite for one spec")
    _add_common(ver, cycles=25, method=True)
    ver.set_defaults(func=_cmd_verify)

    return parser


def entry(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except TwoStrokeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> None:
    sys.exit(entry(argv))


if __name__ == "__main__":
    main()
