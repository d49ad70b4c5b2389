"""Command-line interface: check, simulate, sweep, verify.

Exit codes follow a strict contract:

    check:     0 certified stable, 1 not certified, 2 invalid input
    simulate:  0 decaying verdict, 1 otherwise,    2 invalid input
    sweep:     0 completed,                        2 invalid input
    verify:    0 consistent (incl. the expected sufficient-only gap),
               1 soundness disagreement (certified but not decaying),
               2 invalid input

Output is JSON on stdout (pretty tables with ``--pretty``).  Every run
embeds a manifest with the input hash, tool version, and the tolerances
in effect, so runs are reproducible byte for byte modulo the timestamp.
There is no randomness anywhere in the core path; the sweep overlay's
interior sample uses a fixed, documented seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .certificates import Certificate
from .criteria import CRITERIA_ORDER, check_all
from .eqspec import DEFAULT_NORM_GRID, EquationSpec, SpecError, default_window
from .expressions import EvaluationError, ParseError
from .solver import (DECAY_LAMBDA_MIN, DECAY_RESIDUAL_MAX, DECAY_SPAN_FACTOR,
                     InitialValueProblem, default_step, estimate_decay,
                     integrate, verify_variation_of_constants)
from .sweep import SweepPlan, run_sweep, sweep_workers

INVALID_INPUT = 2


class CliError(Exception):
    """Invalid input; maps to exit code 2 with a diagnostic on stderr."""


def _read_file(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load_spec(path):
    raw = _read_file(path)
    try:
        spec = EquationSpec.from_json(raw.decode("utf-8"))
    except (SpecError, ParseError, EvaluationError, UnicodeDecodeError) as exc:
        raise CliError(f"invalid equation spec {path}: {exc}") from exc
    return spec, hashlib.sha256(raw).hexdigest()


def _manifest(command, spec_hash, parameters):
    return {
        "command": command,
        "tool": "ddestab",
        "version": __version__,
        "input_sha256": spec_hash,
        "parameters": parameters,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _emit(payload, pretty_lines, pretty):
    if pretty:
        print("\n".join(pretty_lines))
    else:
        print(json.dumps(payload, indent=2))


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _cert_rows(certificates):
    rows = [f"{'criterion':10s} {'applicable':10s} {'satisfied':9s} "
            f"{'lhs':>12s} {'rhs':>12s} {'margin':>12s}  exactness"]
    for c in certificates:
        rhs = "unbounded" if c.margin_unbounded else _fmt(c.rhs)
        rows.append(f"{c.criterion_id:10s} {str(c.applicable):10s} "
                    f"{str(c.satisfied):9s} {_fmt(c.lhs):>12s} {rhs:>12s} "
                    f"{_fmt(c.margin):>12s}  {c.exactness}")
    return rows


def cmd_check(args):
    spec, digest = _load_spec(args.spec)
    if args.dump_spec:
        print(spec.to_json())
        return 0
    criteria = args.criteria.split(",") if args.criteria else None
    try:
        result = check_all(spec, criteria=criteria, window=args.window,
                           grid=args.grid)
    except (ValueError, SpecError) as exc:
        raise CliError(str(exc)) from exc
    payload = {
        "manifest": _manifest("check", digest, {
            "criteria": criteria or CRITERIA_ORDER,
            "norm_window": args.window or spec.norm_window
                           or default_window(spec),
            "norm_grid": args.grid or spec.norm_grid or DEFAULT_NORM_GRID,
        }),
        **result.to_dict(),
    }
    summary = result.summary()
    lines = _cert_rows(result.certificates)
    lines.append("")
    lines.append("certified stable" if summary["certified_stable"]
                 else "not certified (criteria are sufficient only)")
    if summary["best_criterion"]:
        margin = ("unbounded" if summary["best_margin_unbounded"]
                  else _fmt(summary["best_margin"]))
        lines.append(f"best criterion: {summary['best_criterion']} "
                     f"(relative margin {margin})")
    _emit(payload, lines, args.pretty)
    return 0 if summary["certified_stable"] else 1


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    spec, digest = _load_spec(args.spec)
    step = args.step if args.step is not None else default_step(spec)
    ivp = InitialValueProblem(spec, x0=args.x0, x0p=args.x0p,
                              horizon=args.horizon)
    traj = integrate(ivp, step=step)
    est = estimate_decay(traj)
    if args.out:
        traj.to_csv(args.out)
    payload = {
        "manifest": _manifest("simulate", digest, {
            "x0": args.x0, "x0p": args.x0p, "horizon": args.horizon,
            "step": step, "lambda_min": DECAY_LAMBDA_MIN,
            "residual_max": DECAY_RESIDUAL_MAX,
            "span_factor": DECAY_SPAN_FACTOR,
        }),
        "decay": est.to_dict(),
        "trajectory_csv": args.out,
        "nodes": len(traj.t),
    }
    lam = "unbounded" if math.isinf(est.lambda_hat) else _fmt(est.lambda_hat)
    lines = [f"verdict: {est.verdict}",
             f"lambda_hat: {lam}   residual: {_fmt(est.residual)}",
             f"fit window: [{_fmt(est.fit_window[0])}, {_fmt(est.fit_window[1])}]"]
    if args.out:
        lines.append(f"trajectory written to {args.out}")
    _emit(payload, lines, args.pretty)
    return 0 if est.verdict == "decaying" else 1


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def cmd_sweep(args):
    raw = _read_file(args.plan)
    try:
        plan = SweepPlan.from_dict(json.loads(raw.decode("utf-8")))
    except (json.JSONDecodeError, KeyError, ValueError, SpecError,
            ParseError, UnicodeDecodeError) as exc:
        raise CliError(f"invalid sweep plan {args.plan}: {exc}") from exc
    os.makedirs(args.out, exist_ok=True)
    sweep = run_sweep(plan)
    grid_path = os.path.join(args.out, "grid.csv")
    boundary_path = os.path.join(args.out, "boundary.csv")
    sweep.write_grid_csv(grid_path)
    sweep.write_boundary_csv(boundary_path)
    manifest = _manifest("sweep", hashlib.sha256(raw).hexdigest(), {
        "plan": plan.to_dict(),
        "workers": sweep_workers(),
        "interior_sim_seed": 0,
    })
    payload = {
        "manifest": manifest,
        "grid_csv": grid_path,
        "boundary_csv": boundary_path,
        "certified_points": int(sweep.certified().sum()),
        "grid_points": int(sweep.certified().size),
        "errors": [list(e) for e in sweep.errors],
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    lines = [f"grid: {payload['grid_points']} points, "
             f"{payload['certified_points']} certified",
             f"wrote {grid_path}", f"wrote {boundary_path}"]
    if sweep.errors:
        lines.append(f"{len(sweep.errors)} per-point failures recorded")
    _emit(payload, lines, args.pretty)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args):
    spec, digest = _load_spec(args.spec)
    result = check_all(spec, window=args.window, grid=args.grid)
    certified = result.certified_stable

    step = args.step if args.step is not None else default_step(spec)
    horizon = args.horizon
    ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=horizon)
    est = estimate_decay(integrate(ivp, step=step))
    while est.verdict == "inconclusive" and horizon < args.max_horizon:
        horizon *= 2
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=horizon)
        est = estimate_decay(integrate(ivp, step=step))

    voc_T = spec.t0 + args.voc_span
    residual = verify_variation_of_constants(spec, _SMOOTH_FORCING, voc_T,
                                             step=args.voc_step)

    decaying = est.verdict == "decaying"
    consistent = (not certified) or decaying
    expected_gap = (not certified) and decaying
    payload = {
        "manifest": _manifest("verify", digest, {
            "horizon": horizon, "step": step,
            "voc_span": args.voc_span, "voc_step": args.voc_step,
        }),
        **result.to_dict(),
        "decay": est.to_dict(),
        "variation_of_constants": {"max_residual": residual,
                                   "forcing": "sin(t)", "span": args.voc_span},
        "agreement": {
            "certified": certified,
            "decay_verdict": est.verdict,
            "consistent": consistent,
            "expected_gap": expected_gap,
        },
    }
    lines = _cert_rows(result.certificates)
    lines.append("")
    lines.append(f"certified: {certified}   simulation: {est.verdict} "
                 f"(lambda_hat {_fmt(None if math.isinf(est.lambda_hat) else est.lambda_hat)})")
    lines.append(f"variation-of-constants residual: {_fmt(residual)}")
    if expected_gap:
        lines.append("note: not certified yet decaying; the criteria are "
                     "sufficient, not necessary")
    _emit(payload, lines, args.pretty)
    return 0 if consistent else 1


def _SMOOTH_FORCING(t):
    return math.sin(t)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="ddestab",
        description="Exponential-stability certificates for damped "
                    "second-order delay equations, cross-validated by "
                    "simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_norm_flags(sp):
        sp.add_argument("--window", type=float, default=None,
                        help="norm sampling window length (default: 100 "
                             "characteristic times)")
        sp.add_argument("--grid", type=int, default=None,
                        help=f"norm sampling grid points (default "
                             f"{DEFAULT_NORM_GRID})")

    sp = sub.add_parser("check", help="run every stability criterion")
    sp.add_argument("spec", help="equation spec JSON file")
    sp.add_argument("--criteria", default=None,
                    help="comma-separated criterion ids "
                         f"(subset of {','.join(CRITERIA_ORDER)})")
    add_norm_flags(sp)
    sp.add_argument("--pretty", action="store_true")
    sp.add_argument("--dump-spec", action="store_true",
                    help="echo the parsed spec canonically and exit")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("simulate", help="integrate and estimate decay")
    sp.add_argument("spec")
    sp.add_argument("--x0", type=float, default=1.0)
    sp.add_argument("--x0p", type=float, default=0.0)
    sp.add_argument("--horizon", type=float, default=100.0)
    sp.add_argument("--step", type=float, default=None,
                    help="integration step (default: min(1e-2, min lag / 4))")
    sp.add_argument("--out", default=None, help="trajectory CSV path")
    sp.add_argument("--pretty", action="store_true")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("sweep", help="two-parameter stability-region map")
    sp.add_argument("plan", help="sweep plan JSON file")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--pretty", action="store_true")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("verify",
                        help="cross-validate certificates against simulation")
    sp.add_argument("spec")
    sp.add_argument("--horizon", type=float, default=160.0)
    sp.add_argument("--max-horizon", type=float, default=1280.0)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--voc-span", type=float, default=4.0,
                    help="span of the variation-of-constants check")
    sp.add_argument("--voc-step", type=float, default=1e-3)
    add_norm_flags(sp)
    sp.add_argument("--pretty", action="store_true")
    sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID_INPUT
    except (SpecError, ParseError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
