"""Command-line driver.

Commands:
  mesh        generate a mesh and write the text format
  table       per-level table of h, kappa_h, C1(h), M_h and kappa rates
  beta-sweep  kappa_h over a list of beta values, plot-ready CSV
  estimate    certified bound report for a named boundary datum
  verify      run the verification battery, TAP output

Exit codes: 0 success, 1 usage error, 2 numerical failure.  Errors print a
single machine-parsable line on stderr.  The environment variable
HYPERCIRCLE_TOL overrides the default solver residual tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import estimator, kappa, verify
from .constants import c1_of_mesh
from .linalg import DEFAULT_TOL, NumericalError
from .mesh import Domain, MeshError, generate, write_mesh_text

__all__ = ["main"]

_PROG = "hypercircle"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise UsageError(f"bad level range {text!r}") from None
        if hi_i < lo_i:
            raise UsageError(f"empty level range {text!r}")
        return list(range(lo_i, hi_i + 1))
    try:
        return [int(text)]
    except ValueError:
        raise UsageError(f"bad level {text!r}") from None


def _parse_betas(text: str) -> list[float]:
    betas: list[float] = []
    dropped = False
    for part in text.split(","):
        try:
            b = float(part)
        except ValueError:
            raise UsageError(f"bad beta value {part!r}") from None
        if b <= 0:
            raise UsageError(f"beta must be positive, got {part!r}")
        if b in betas:
            dropped = True
            continue
        betas.append(b)
    if dropped:
        print(f"{_PROG}: warning: duplicate beta values dropped", file=sys.stderr)
    return betas


def _default_tol() -> float:
    raw = os.environ.get("HYPERCIRCLE_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"bad HYPERCIRCLE_TOL value {raw!r}") from None


def _add_common(p: argparse.ArgumentParser, levels: bool = False):
    p.add_argument("--domain", required=True,
                   help="square | right-tri | equi-tri | lshape")
    if levels:
        p.add_argument("--levels", default=None, help="level range A..B or single level")
        p.add_argument("--level", type=int, default=None)
    else:
        p.add_argument("--level", type=int, required=True)
    p.add_argument("--beta", type=float, default=100.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)


def _build_parser() -> _Parser:
    parser = _Parser(prog=_PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a mesh and write the text format")
    p.add_argument("--domain", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("table", help="per-level kappa/C1/M_h table")
    _add_common(p, levels=True)

    p = sub.add_parser("beta-sweep", help="kappa over beta values")
    _add_common(p, levels=True)
    p.add_argument("--betas", default="0.1,1,10,100")

    p = sub.add_parser("estimate", help="certified bound report for a datum")
    _add_common(p)
    p.add_argument("--f", dest="f_name", required=True,
                   help="registered boundary datum: " + ", ".join(verify.BOUNDARY_DATA))

    p = sub.add_parser("verify", help="run verification checks (TAP output)")
    _add_common(p)
    return parser


def _levels_of(args) -> list[int]:
    if getattr(args, "levels", None):
        return _parse_levels(args.levels)
    if args.level is not None:
        return [args.level]
    raise UsageError("one of --level or --levels is required")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _table_rows(args) -> list[dict]:
    tol = args.tol if args.tol is not None else _default_tol()
    rows = []
    kappas = []
    for level in _levels_of(args):
        mesh = generate(args.domain, level)
        ws = kappa.KappaWorkspace(mesh, tol=tol, jobs=args.jobs)
        result = kappa.compute_kappa(
            mesh, kappa.YParams.for_mesh(mesh, args.beta), workspace=ws, tol=tol)
        kappas.append(result.kappa)
        rate = (math.log(kappas[-2] / kappas[-1]) / math.log(2.0)
                if len(kappas) > 1 else None)
        c1 = c1_of_mesh(mesh)
        rows.append({
            "level": level, "h": mesh.h, "kappa": result.kappa, "c1": c1,
            "mh": math.hypot(c1, result.kappa), "rate": rate,
        })
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cmd_mesh(args) -> int:
    mesh = generate(args.domain, args.level)
    if args.out is None:
        write_mesh_text(mesh, sys.stdout)
    else:
        with open(args.out, "w") as fh:
            write_mesh_text(mesh, fh)
    return 0


def _cmd_table(args) -> int:
    rows = _table_rows(args)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = ["level,h,kappa,c1,mh,rate"]
        lines += [",".join(_fmt(r[k]) for k in ("level", "h", "kappa", "c1", "mh", "rate"))
                  for r in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if args.out is not None:
        print(f"{'h':>12} {'kappa':>8} {'C1':>8} {'Mh':>8} {'rate':>8}")
        for r in rows:
            rate = f"{r['rate']:.4f}" if r["rate"] is not None else "-"
            print(f"{r['h']:12.6f} {r['kappa']:8.4f} {r['c1']:8.4f} "
                  f"{r['mh']:8.4f} {rate:>8}")
    return 0


def _cmd_beta_sweep(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    betas = _parse_betas(args.betas)
    rows = []
    for level in _levels_of(args):
        mesh = generate(args.domain, level)
        ws = kappa.KappaWorkspace(mesh, tol=tol, jobs=args.jobs)
        for beta in betas:
            result = kappa.compute_kappa(
                mesh, kappa.YParams.for_mesh(mesh, beta), workspace=ws, tol=tol)
            rows.append({"level": level, "h": mesh.h, "beta": beta,
                         "kappa": result.kappa})
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = ["level,h,beta,kappa"]
        lines += [",".join(_fmt(r[k]) for k in ("level", "h", "beta", "kappa"))
                  for r in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _cmd_estimate(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    try:
        f, exact = verify.BOUNDARY_DATA[args.f_name]
    except KeyError:
        raise UsageError(
            f"unknown boundary datum {args.f_name!r} "
            f"(registered: {', '.join(verify.BOUNDARY_DATA)})") from None
    mesh = generate(args.domain, args.level)
    ws = kappa.KappaWorkspace(mesh, tol=tol, jobs=args.jobs)
    report = estimator.full_report(mesh, f, args.beta, workspace=ws, tol=tol)
    if exact is not None:
        solver = ws.p1
        u_gal = solver.solve_load(estimator.quadrature_boundary_load(mesh, f))
        report.true_err_h1, report.true_err_b = verify.true_error(mesh, u_gal, exact)
    if args.format == "json":
        text = report.to_json(indent=2) + "\n"
    else:
        text = report.csv_header() + "\n" + report.to_csv_row() + "\n"
    _emit(text, args.out)
    return 0


def _cmd_verify(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    checks = verify.verification_checks(args.domain, args.level, beta=args.beta,
                                        tol=tol, jobs=args.jobs)
    lines = [f"1..{len(checks)}"]
    lines += [c.tap_line(i) for i, c in enumerate(checks, start=1)]
    text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if not all(c.ok for c in checks):
        raise NumericalError("verification checks failed")
    return 0


_COMMANDS = {
    "mesh": _cmd_mesh,
    "table": _cmd_table,
    "beta-sweep": _cmd_beta_sweep,
    "estimate": _cmd_estimate,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if hasattr(args, "domain"):
            args.domain = Domain.parse(args.domain)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{_PROG}: error: {exc}", file=sys.stderr)
        return 1
    except MeshError as exc:
        print(f"{_PROG}: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"{_PROG}: numerical-error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
