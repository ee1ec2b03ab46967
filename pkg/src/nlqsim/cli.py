"""Command-line front end: load oracles, run algorithms, emit reports.

Outputs are deterministic for a fixed seed: reports are JSON documents
with sorted keys and no timestamps (pass --timing to record wall time),
tables are tab-separated with a one-line header.

Exit codes: 0 ran and decided, 1 usage or input error, 2 computation
budget or synthesis failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .algorithms import (
    Alg1Config,
    Alg2Config,
    DEFAULT_GATE_EPS,
    run_algorithm1,
    run_algorithm1_count,
    run_algorithm2,
    run_algorithm2_count,
)
from .gates import (
    PAIR_CASE_INPUTS,
    PAIR_CASE_TARGETS,
    StretchMap,
    SynthesisError,
    build_N,
    ideal_merge_gate,
)
from .oracle import DimacsError, OracleSpec, load_truth_table, parse_dimacs
from .weinberg import HbarFunction, trajectory

SCHEMA_VERSION = "1"


class CliError(Exception):
    """Usage or input problem; maps to exit code 1."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _report_document(command: str, config: dict, payload: dict,
                     wall_time: float | None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "report": payload,
        "wall_time": wall_time,
        "library_version": __version__,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _load_oracle(args) -> OracleSpec:
    given = [p for p in (args.input, args.truth_table) if p is not None]
    if len(given) != 1:
        raise CliError("provide exactly one of --input (DIMACS) or --truth-table (JSON)")
    try:
        with open(given[0], "rb") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {given[0]}: {exc}") from exc
    try:
        if args.input is not None:
            return OracleSpec(parse_dimacs(text))
        return OracleSpec(load_truth_table(text))
    except (DimacsError, ValueError) as exc:
        raise CliError(f"{given[0]}: {exc}") from exc


def _stretch_from(args) -> StretchMap:
    try:
        return StretchMap(theta0=args.theta0, eta=args.eta, lam=args.lam)
    except ValueError as exc:
        raise CliError(f"invalid stretch parameters: {exc}") from exc


def _parse_hbar(text: str) -> HbarFunction:
    try:
        return HbarFunction(tuple(float(x) for x in text.split(",")))
    except ValueError as exc:
        raise CliError(f"invalid --hbar coefficients {text!r}: {exc}") from exc


def _config_echo(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def cmd_solve(args) -> int:
    oracle = _load_oracle(args)
    started = time.monotonic()
    if args.algorithm == "alg1":
        cfg = Alg1Config(
            n=oracle.num_vars,
            oracle=oracle,
            stretch=_stretch_from(args),
            max_applications=args.max_applications,
            max_trials=args.max_trials,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
            decision_threshold=args.threshold,
        )
        report = run_algorithm1(cfg)
    else:
        cfg = Alg2Config(
            n=oracle.num_vars,
            oracle=oracle,
            gate=ideal_merge_gate(args.eps),
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        report = run_algorithm2(cfg)
    wall = time.monotonic() - started if args.timing else None
    echo = _config_echo(args, ("algorithm", "seed", "noise_sigma", "eps",
                               "lam", "eta", "theta0", "threshold"))
    _write_text(args.out, _report_document("solve", echo, report.to_dict(), wall))
    return 0 if report.succeeded else 2


def cmd_count(args) -> int:
    oracle = _load_oracle(args)
    started = time.monotonic()
    if args.algorithm == "alg1":
        cfg = Alg1Config(
            n=oracle.num_vars,
            oracle=oracle,
            stretch=_stretch_from(args),
            max_applications=args.max_applications,
            max_trials=args.max_trials,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        report = run_algorithm1_count(cfg)
    else:
        cfg = Alg2Config(
            n=oracle.num_vars,
            oracle=oracle,
            counting=True,
            counter_width=args.counter_width,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        report = run_algorithm2_count(cfg)
    wall = time.monotonic() - started if args.timing else None
    echo = _config_echo(args, ("algorithm", "seed", "noise_sigma",
                               "lam", "eta", "theta0", "counter_width"))
    _write_text(args.out, _report_document("count", echo, report.to_dict(), wall))
    return 0 if report.succeeded else 2


def cmd_dynamics(args) -> int:
    h = _parse_hbar(args.hbar)
    parts = args.initial.split(",")
    if len(parts) != 4:
        raise CliError("--initial needs four comma-separated reals: re1,im1,re2,im2")
    try:
        vals = [float(x) for x in parts]
    except ValueError as exc:
        raise CliError(f"invalid --initial: {exc}") from exc
    c1 = complex(vals[0], vals[1])
    c2 = complex(vals[2], vals[3])
    if abs(c1) ** 2 + abs(c2) ** 2 <= 0:
        raise CliError("--initial must have positive norm")
    if args.points < 1 or args.t_max < 0 or args.dt <= 0:
        raise CliError("invalid time grid")
    times = np.linspace(0.0, args.t_max, args.points)
    rows = trajectory(c1, c2, h, times, dt=args.dt)
    lines = ["t\tre_c1\tim_c1\tre_c2\tim_c2\tresidual"]
    for row in rows:
        lines.append("\t".join(_fmt(x) for x in row))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_ngate_verify(args) -> int:
    h = _parse_hbar(args.hbar) if args.hbar is not None else None
    try:
        gate = build_N(h, args.eps)
    except SynthesisError as exc:
        sys.stderr.write(f"synthesis failed: {exc}\n")
        return 2
    fidelities = []
    for case_in, case_target in zip(PAIR_CASE_INPUTS, PAIR_CASE_TARGETS):
        out = gate.apply_to_pair(case_in)
        fidelities.append(float(abs(np.vdot(case_target, out)) ** 2))
    payload = {
        "case_fidelities": fidelities,
        "fidelity_min": min(fidelities),
        "eps": args.eps,
        "audit": gate.audit(),
    }
    echo = _config_echo(args, ("eps", "hbar"))
    _write_text(args.out, _report_document("ngate-verify", echo, payload, None))
    return 0 if min(fidelities) >= 1.0 - args.eps else 2


def cmd_separation(args) -> int:
    oracle = _load_oracle(args)
    cfg = Alg1Config(
        n=oracle.num_vars,
        oracle=oracle,
        stretch=_stretch_from(args),
        max_applications=args.max_applications,
        max_trials=args.max_trials,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    report = run_algorithm1(cfg)
    if not report.succeeded:
        sys.stderr.write("separation run exhausted its trial budget\n")
        return 2
    lines = ["k\tbloch_separation"]
    for k, sep in report.separation_trajectory:
        lines.append(f"{k}\t{_fmt(sep)}")
    _write_text(args.out, "\n".join(lines) + "\n")

    growth = _fit_growth(report)
    summary = json.dumps(
        {"fitted_growth": growth, "applications_to_threshold": report.applications_to_threshold},
        sort_keys=True,
    ) + "\n"
    if args.out is None:
        sys.stderr.write(summary)
    else:
        sys.stdout.write(summary)
    return 0


def _fit_growth(report) -> float | None:
    """Geometric-mean separation ratio over the in-region amplification steps."""
    cross = report.applications_to_threshold
    if cross is None or cross < 1:
        return None
    seps = dict(report.separation_trajectory)
    ratios = []
    for k in range(cross):
        a, b = seps.get(k), seps.get(k + 1)
        if a and b and a > 0:
            ratios.append(math.log(b / a))
    if not ratios:
        return None
    return float(math.exp(sum(ratios) / len(ratios)))


def _add_oracle_flags(p):
    p.add_argument("--input", help="DIMACS CNF file")
    p.add_argument("--truth-table", help="truth-table JSON file")


def _add_common_flags(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--noise-sigma", type=float, default=0.0, dest="noise_sigma",
                   help="gaussian jitter on gate parameters, radians (default 0)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--timing", action="store_true",
                   help="record wall time in the report (breaks byte determinism)")


def _add_stretch_flags(p):
    p.add_argument("--lambda", type=float, default=math.log(2.0), dest="lam",
                   help="stretch exponent per application (default ln 2)")
    p.add_argument("--eta", type=float, default=math.pi / 4.0,
                   help="angular extent of the stretch region (default pi/4)")
    p.add_argument("--theta0", type=float, default=math.pi / 2.0,
                   help="center of the stretch region (default pi/2)")
    p.add_argument("--max-applications", type=int, default=96, dest="max_applications")
    p.add_argument("--max-trials", type=int, default=None, dest="max_trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlqsim",
        description="Oracle search and counting under nonlinear qubit dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide whether the oracle has any solution")
    _add_oracle_flags(p)
    p.add_argument("--algorithm", choices=("alg1", "alg2"), required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_GATE_EPS,
                   help=f"merge-gate tolerance for alg2 (default {DEFAULT_GATE_EPS})")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="decision threshold as a fraction of pi for alg1 (default 0.5)")
    _add_stretch_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("count", help="count the oracle's solutions exactly")
    _add_oracle_flags(p)
    p.add_argument("--algorithm", choices=("alg1", "alg2"), required=True)
    p.add_argument("--counter-width", type=int, default=None, dest="counter_width",
                   help="counter register width (alg2, default n + 1)")
    _add_stretch_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("dynamics", help="export a nonlinear evolution trajectory")
    p.add_argument("--hbar", default="0,0,1",
                   help="comma-separated polynomial coefficients of hbar(a)")
    p.add_argument("--initial", default="0.7071067811865476,0,0.7071067811865476,0",
                   help="initial pair as re1,im1,re2,im2")
    p.add_argument("--t-max", type=float, default=10.0, dest="t_max")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--dt", type=float, default=1e-3, help="integrator step")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("ngate-verify", help="build the merge gate and check its table")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--hbar", default=None,
                   help="contraction-stage profile (default: phase-aligned)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_ngate_verify)

    p = sub.add_parser("separation", help="emit the hypothesis-separation table")
    _add_oracle_flags(p)
    _add_stretch_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_separation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SynthesisError as exc:
        sys.stderr.write(f"synthesis failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
