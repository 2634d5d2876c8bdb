"""Command-line interface: ``relaxlab tableau|system|run|converge``.

Exit codes: 0 success, 1 a verification reported failures, 2 a
convergence cell failed, 3 bad configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import lab
from .densemat import read_matrix
from .errors import CellFailure, NullityMismatch, RelaxLabError, StructureViolation, TooFewStages
from .relaxsys import RelaxationSystem, StabilityCertificate, builtin, check_structural_stability, derive_certificate
from .spectral import modal_error, synthesize, write_grid_csv
from .stepper import exact_evolve, integrate, plan
from .tableaux import (
    MCertificate,
    assumption_H,
    check_M,
    classify,
    load_tableau,
    order_residuals,
    registry,
    scheme_names,
    stage_conditions,
)

EXIT_OK, EXIT_FAILED, EXIT_CELL, EXIT_CONFIG = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"relaxlab: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- tableau


def _load_scheme(spec: str):
    if spec.lower() in scheme_names():
        return registry(spec)
    if Path(spec).is_file():
        return load_tableau(spec)
    raise RelaxLabError(f"{spec!r} is neither a registered scheme ({', '.join(scheme_names())}) nor a file")


def cmd_tableau_list(args) -> int:
    print(f"{'name':<9} {'label':<12} {'s':>2} {'order':>5}  CK   ARS  ISA  GSA  c=ct")
    for name in scheme_names():
        T = registry(name)
        cl = classify(T)
        flags = "  ".join(f"{'yes' if f else 'no ':<3}" for f in (cl.isCK, cl.isARS, cl.isISA, cl.isGSA, cl.cMatched))
        print(f"{name:<9} {T.name:<12} {T.s:>2} {T.order:>5}  {flags}")
    return EXIT_OK


def cmd_tableau_verify(args) -> int:
    try:
        T = _load_scheme(args.scheme)
    except StructureViolation as exc:
        _err(f"structure violation: {exc}")
        return EXIT_CONFIG
    cl = classify(T)
    print(f"scheme {T.name or args.scheme}: s = {T.s}")
    print("classification:")
    for key in ("isCK", "isARS", "isISA", "isGSA", "cMatched"):
        print(f"  {key:<8} {getattr(cl, key)}")
    report = order_residuals(T, 3)
    achieved = 0
    for p in (1, 2, 3):
        if order_residuals(T, p).all_pass:
            achieved = p
    print(f"order conditions (achieved order {achieved}):")
    print(report.format())
    ok = T.order is None or achieved >= T.order
    try:
        print("stage-order / vanishing-coefficient conditions:")
        print(stage_conditions(T).format())
    except TooFewStages:
        print("  (needs s >= 3)")
    try:
        passed, v = assumption_H(T)
        print(f"assumption (H): {'ok' if passed else 'FAIL'}  null vector {np.array2string(v, precision=6)}")
    except NullityMismatch as exc:
        print(f"assumption (H): n/a ({exc})")
    if args.cert:
        M = read_matrix(args.cert)
        m1, m2, chk = check_M(T, MCertificate(M))
        print(f"M certificate: M1 {'ok' if m1 else 'FAIL'} (rank {chk.m1_rank}), M2 {'ok' if m2 else 'FAIL'} (rank {chk.m2_rank})")
        ok = ok and m1 and m2
    else:
        print("M certificate: not bundled")
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------- system


def _system_from_args(args, epsilon: float):
    if args.model:
        return builtin(args.model, epsilon)
    if not (args.a and args.q and args.r):
        raise RelaxLabError("give a model name or --a, --q and --r")
    A, Q = read_matrix(args.a), read_matrix(args.q)
    system = RelaxationSystem(A, Q, args.r, epsilon)
    if args.p and args.a0:
        cert = StabilityCertificate.from_transform(read_matrix(args.p), read_matrix(args.a0), Q, args.r)
    else:
        cert = derive_certificate(A, Q, args.r)
    return system, cert


def cmd_system_check(args) -> int:
    system, cert = _system_from_args(args, args.eps)
    report = check_structural_stability(system.A, system.Q, cert, system.r)
    print(f"system {system.name}: m = {system.m}, r = {system.r}")
    print(report.format())
    return EXIT_OK if report.all_pass else EXIT_FAILED


# ---------------------------------------------------------------- run / converge


def cmd_run(args) -> int:
    system, cert = builtin(args.model, args.eps)
    u0 = lab.initial_state(args.model, args.n)
    layered = lab.prepare_layer(system, u0, args.t0, args.layer, P=cert.P)
    span = args.t - args.t0
    if not span > 0:
        raise ValueError("--t must exceed --t0")
    approx = integrate(plan(system, registry(args.scheme), args.dt), layered, span)
    ref = exact_evolve(system, layered, span, cert.P)
    err = modal_error(approx, ref)
    print(f"model={args.model} scheme={args.scheme} epsilon={args.eps:.17g} dt={args.dt:.17g} "
          f"l2_error={err:.17g}")
    if args.out:
        write_grid_csv(synthesize(approx), args.out)
    return EXIT_OK


_CONVERGE_FLAGS = {
    "model": "model",
    "schemes": "schemes",
    "eps_lo": "eps_lo",
    "eps_hi": "eps_hi",
    "eps_count": "eps_count",
    "dt_base": "dt_base",
    "dt_levels": "dt_levels",
    "n": "N",
    "t0": "T0",
    "t": "T",
    "ref": "reference",
    "layer": "layer",
    "layer_dt": "layer_dt",
}


def build_config(args) -> lab.ExperimentConfig:
    """Config file values first, then any flag given on the command line."""
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {args.config}: {exc}") from exc
    for flag, key in _CONVERGE_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            values[key] = val
    known = {f.name for f in fields(lab.ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if isinstance(values.get("schemes"), str):
        values["schemes"] = tuple(s.strip() for s in values["schemes"].split(",") if s.strip())
    for key in ("schemes", "epsilons", "dts"):
        if values.get(key) is not None:
            values[key] = tuple(values[key])
    return lab.ExperimentConfig(**values)


def cmd_converge(args) -> int:
    cfg = build_config(args)
    for name in cfg.scheme_list():
        registry(name)
    table = lab.convergence_study(cfg, progress=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None)
    if args.out:
        lab.write_csv(table, args.out)
    fits = lab.order_fits(table)
    if args.fits:
        lab.write_csv(fits, args.fits, fits=True)
    for f in fits:
        if f.epsilon == "uniform":
            print(f"{f.scheme:<9} uniform slope {f.slope:.3f} (residual {f.residual:.3f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    tab = sub.add_parser("tableau", help="inspect IMEX-RK tableaux")
    tsub = tab.add_subparsers(dest="action", required=True)
    tsub.add_parser("list", help="list registered schemes").set_defaults(func=cmd_tableau_list)
    ver = tsub.add_parser("verify", help="check order and structure conditions")
    ver.add_argument("scheme", help="registered name or tableau file")
    ver.add_argument("--cert", help="matrix file with an M certificate to check")
    ver.set_defaults(func=cmd_tableau_verify)

    sysp = sub.add_parser("system", help="relaxation systems")
    ssub = sysp.add_subparsers(dest="action", required=True)
    chk = ssub.add_parser("check", help="verify the structural stability conditions")
    chk.add_argument("model", nargs="?", help="broadwell or grad:M")
    chk.add_argument("--a", help="matrix file for A")
    chk.add_argument("--q", help="matrix file for Q")
    chk.add_argument("--r", type=int, help="stiff block rank")
    chk.add_argument("--p", help="matrix file for the certificate P")
    chk.add_argument("--a0", help="matrix file for the certificate A0")
    chk.add_argument("--eps", type=float, default=1.0)
    chk.set_defaults(func=cmd_system_check)

    run = sub.add_parser("run", help="integrate one configuration and report its error")
    run.add_argument("--model", default="broadwell")
    run.add_argument("--scheme", default="ars222")
    run.add_argument("--eps", type=float, default=1.0)
    run.add_argument("--dt", type=float, default=0.01)
    run.add_argument("--t0", type=float, default=1.0)
    run.add_argument("--t", type=float, default=2.0)
    run.add_argument("--n", type=int, default=40)
    run.add_argument("--layer", choices=("exact", "bhr", "paper"), default="exact")
    run.add_argument("--out", help="grid CSV of the final numerical solution")
    run.set_defaults(func=cmd_run)

    conv = sub.add_parser("converge", help="epsilon x dt x scheme convergence study")
    conv.add_argument("--config", help="JSON file with ExperimentConfig fields")
    conv.add_argument("--model")
    conv.add_argument("--schemes", help="comma-separated scheme names")
    conv.add_argument("--eps-lo", dest="eps_lo", type=float)
    conv.add_argument("--eps-hi", dest="eps_hi", type=float)
    conv.add_argument("--eps-count", dest="eps_count", type=int)
    conv.add_argument("--dt-base", dest="dt_base", type=float)
    conv.add_argument("--dt-levels", dest="dt_levels", type=int)
    conv.add_argument("--n", type=int)
    conv.add_argument("--t0", type=float)
    conv.add_argument("--t", type=float)
    conv.add_argument("--ref", choices=("exact", "fine"))
    conv.add_argument("--layer", choices=("exact", "bhr", "paper"),
                      help="initial-layer preparation: exact semigroup or BHR(5,5,3)* at a small step")
    conv.add_argument("--layer-dt", dest="layer_dt", type=float)
    conv.add_argument("--out", help="error table CSV")
    conv.add_argument("--fits", help="order-fit CSV")
    conv.add_argument("-v", "--verbose", action="store_true")
    conv.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CellFailure as exc:
        _err(str(exc))
        return EXIT_CELL
    except KeyError as exc:
        _err(str(exc.args[0]) if exc.args else repr(exc))
        return EXIT_CONFIG
    except (RelaxLabError, ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
