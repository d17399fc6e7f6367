"""Command line interface: ``prabfde solve | check | ml``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .const_coeff import ConstProblem, solve_const_ivp
from .errors import NonConvergence, PrabError, ValidationError
from .ml_functions import MLParams, ml3
from .oracle import OracleConfig, compare, volterra_direct
from .problemfile import ROUTES, ProblemFile, load_problem_file
from .solver import Solution, SolveConfig, solve_ivp
from .wrt_function import PsiProblemSpec, solve_ivp_wrt, tau_problem

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4
ORACLE_REFINEMENT = 4


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_table(out, header: Sequence[str], columns: Sequence[str], rows: np.ndarray):
    for line in header:
        out.write(f"# {line}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(fmt(x) for x in row) + "\n")


def _config(pf: ProblemFile, args) -> SolveConfig:
    changes = {}
    if args.grid is not None:
        changes["n_points"] = args.grid
    if args.tol is not None:
        changes["picard_tol"] = args.tol
    if args.max_iter is not None:
        changes["max_iters"] = args.max_iter
    return dataclasses.replace(pf.config, **changes)


def _route(pf: ProblemFile, args) -> str:
    if getattr(args, "const", False):
        return "const"
    return pf.route if args.route in (None, "auto") else args.route


def _solve(pf: ProblemFile, route: str, cfg: SolveConfig) -> Solution:
    if pf.psi is not None:
        if route == "const":
            raise ValidationError("the constant-coefficient route does not support [psi]")
        return solve_ivp_wrt(PsiProblemSpec(pf.spec, pf.psi), cfg)
    if route == "const":
        if pf.const is None:
            s = pf.spec
            if len(set(s.thetas)) != 1 or not all(isinstance(x, float) for x in s.sigmas):
                raise ValidationError(
                    "the constant-coefficient route needs constant sigmas and a single theta"
                )
            pf.const = ConstProblem(s.alpha, s.betas, s.thetas[0], s.omega, s.sigmas, s.g, s.e, s.T)
        return solve_const_ivp(pf.const, cfg)
    return solve_ivp(pf.spec, cfg)


def _header(pf: ProblemFile, route: str, cfg: SolveConfig, sol: Solution) -> List[str]:
    return [
        f"prabfde {__version__}",
        f"problem_sha256: {pf.sha256}",
        f"route: {route}" + (" (psi)" if pf.psi is not None else ""),
        f"n_points: {cfg.n_points}",
        f"iterations: {sol.iterations}",
        f"residual_norm: {fmt(sol.residual_norm)}",
    ]


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def cmd_solve(args) -> int:
    pf = load_problem_file(args.problem)
    cfg = _config(pf, args)
    route = _route(pf, args)
    sol = _solve(pf, route, cfg)
    header = _header(pf, route, cfg, sol)
    if args.cross_check:
        other = "picard" if route == "const" else "const"
        alt = _solve(pf, other, cfg)
        d = compare(sol.v, alt.v)
        header += [f"cross_check_route: {other}", f"cross_check_max: {fmt(d['max'])}",
                   f"cross_check_l2: {fmt(d['l2'])}"]
    rp = sol.residual_pointwise if sol.residual_pointwise is not None else np.full(cfg.n_points, np.nan)
    rows = np.column_stack([sol.v.t, sol.v.values, sol.u.values, rp])
    out, close = _open_out(args.out)
    try:
        write_table(out, header, ["t", "v", "u", "residual_pointwise"], rows)
    finally:
        if close:
            out.close()
    if args.canonical:
        basis = sol.canonical or []
        cols = ["t"] + [f"v_{j}" for j in range(len(basis))]
        data = np.column_stack([sol.v.t] + [b.values for b in basis])
        with open(args.canonical, "w", encoding="utf-8", newline="\n") as fh:
            write_table(fh, header, cols, data)
    return EXIT_OK


def cmd_check(args) -> int:
    pf = load_problem_file(args.problem)
    cfg = _config(pf, args)
    route = _route(pf, args)
    fine = OracleConfig(n_points=ORACLE_REFINEMENT * (cfg.n_points - 1) + 1, quad_tol=cfg.series_tol)
    if pf.psi is not None:
        # compare in the transformed variable, where both methods actually run
        base = tau_problem(PsiProblemSpec(pf.spec, pf.psi))
        sol = solve_ivp(base, cfg)
    else:
        base = pf.spec
        sol = _solve(pf, route, cfg)
    ref = volterra_direct(base, fine)
    d = compare(sol.v, ref.v)
    ok = d["max"] <= args.tol_check
    lines = [
        f"route: {route}",
        f"n_points: {cfg.n_points}",
        f"oracle_n_points: {fine.n_points}",
        f"max_divergence: {fmt(d['max'])}",
        f"l2_divergence: {fmt(d['l2'])}",
        f"oracle_residual: {fmt(ref.residual_norm)}",
        f"tol: {fmt(args.tol_check)}",
        f"status: {'pass' if ok else 'fail'}",
    ]
    out, close = _open_out(args.out)
    try:
        out.write("\n".join(lines) + "\n")
    finally:
        if close:
            out.close()
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ml(args) -> int:
    if args.n < 1:
        raise ValidationError("--n must be at least 1")
    z = np.linspace(args.z_from, args.z_to, args.n)
    vals = np.atleast_1d(ml3(MLParams(args.alpha, args.beta, args.theta), z))
    out, close = _open_out(args.out)
    try:
        write_table(
            out,
            [f"prabfde {__version__}", f"alpha: {fmt(args.alpha)}", f"beta: {fmt(args.beta)}",
             f"theta: {fmt(args.theta)}"],
            ["z", "value"],
            np.column_stack([z, vals]),
        )
    finally:
        if close:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prabfde", description="Linear Caputo-Prabhakar differential equations."
    )
    parser.add_argument("--version", action="version", version=f"prabfde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem file")
        p.add_argument("--grid", type=int, help="number of grid points (overrides the file)")
        p.add_argument("--tol", type=float, help="Picard tolerance for solve, divergence threshold for check")
        p.add_argument("--max-iter", type=int, dest="max_iter", help="Picard iteration cap")
        p.add_argument("--route", choices=ROUTES, help="solution route (default: from the file)")
        p.add_argument("--out", help="output path (default: stdout)")

    s = sub.add_parser("solve", help="solve and write a CSV table")
    common(s)
    s.add_argument("--const", action="store_true", help="shorthand for --route const")
    s.add_argument("--canonical", metavar="PATH", help="also write the canonical set to PATH")
    s.add_argument("--cross-check", action="store_true", dest="cross_check",
                   help="solve by the other route too and report the difference")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="compare against the collocation oracle on a 4x finer grid")
    common(c)
    c.set_defaults(func=cmd_check, tol_check=None)

    m = sub.add_parser("ml", help="tabulate a Mittag-Leffler function")
    m.add_argument("--alpha", type=float, required=True)
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--theta", type=float, default=1.0)
    m.add_argument("--from", type=float, dest="z_from", required=True)
    m.add_argument("--to", type=float, dest="z_to", required=True)
    m.add_argument("--n", type=int, default=11)
    m.add_argument("--out")
    m.set_defaults(func=cmd_ml)
    return parser


def _error(exc: BaseException, code: int) -> int:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}, sort_keys=True)
        + "\n"
    )
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        # for check, --tol is the pass/fail threshold on the divergence
        args.tol_check = 1e-4 if args.tol is None else args.tol
        args.tol = None
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        return _error(exc, EXIT_VALIDATION)
    except (NonConvergence, ArithmeticError) as exc:
        return _error(exc, EXIT_NONCONVERGENCE)
    except OSError as exc:
        return _error(exc, EXIT_IO)
    except PrabError as exc:
        return _error(exc, EXIT_NONCONVERGENCE)


if __name__ == "__main__":
    sys.exit(main())
