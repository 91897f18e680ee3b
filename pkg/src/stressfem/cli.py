"""Command line frontend.

Four subcommands: `mesh` writes a uniform grid as JSON, `verify` runs the
structural check suite, `solve` runs one manufactured-load solve and writes
the coefficient vectors, `study` runs a convergence study and writes the
error table.  Exit codes: 0 on success, 1 on a failed check or solve, 2 on
argument errors.  Identical arguments produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from stressfem.assembly import Material, build_saddle_system
from stressfem.mesh import generate_uniform_mesh, mesh_to_json
from stressfem.solver import SolverError, solve_saddle
from stressfem.study import convergence_study, export_report, manufactured_case
from stressfem.verify import run_all

__all__ = ["build_parser", "run", "main"]


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _levels(text):
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list: {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError(f"levels must be positive: {text!r}")
    return values


def _add_problem_flags(parser, with_m):
    parser.add_argument("--dim", type=int, choices=(2, 3), default=2,
                        help="space dimension (default 2)")
    parser.add_argument("--k", type=int, choices=(0, 1, 2), default=0,
                        help="displacement order; stress order is k + 1")
    parser.add_argument("--space", choices=("s1", "s2"), default="s1",
                        help="stress space: full face family (s1) or "
                             "reduced bubble plus vertex family (s2)")
    parser.add_argument("--eta", type=float, default=None,
                        help="penalty weight (default 1.0, or 0.1 for the "
                             "3D s2 study)")
    parser.add_argument("--mu", type=float, default=0.5,
                        help="shear modulus (default 0.5)")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="first Lame parameter (default 1.0)")
    if with_m:
        parser.add_argument("--m", type=_positive_int, default=4,
                            help="subdivisions per side (default 4)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stressfem",
        description="Mixed stress elements for linear elasticity on "
                    "simplicial grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="write a uniform grid as JSON")
    mesh.add_argument("--dim", type=int, choices=(2, 3), required=True)
    mesh.add_argument("--m", type=_positive_int, required=True,
                      help="subdivisions per side")
    mesh.add_argument("--out", help="output path (default stdout)")

    ver = sub.add_parser("verify", help="run the structural check suite")
    ver.add_argument("--all", action="store_true",
                     help="run every check (this is also the default)")
    ver.add_argument("--trials", type=_positive_int, default=10,
                     help="random simplices per unisolvency check")
    ver.add_argument("--seed", type=int, default=7)
    ver.add_argument("--format", choices=("text", "json"), default="text")
    ver.add_argument("--out", help="output path (default stdout)")

    solve = sub.add_parser(
        "solve", help="solve the manufactured problem on one grid")
    _add_problem_flags(solve, with_m=True)
    solve.add_argument("--out", help="solution JSON path (default stdout)")
    solve.add_argument("--dump-matrices", metavar="PREFIX",
                       help="also write the system blocks in matrix market "
                            "format under this path prefix")

    study = sub.add_parser(
        "study", help="run a convergence study over a mesh sequence")
    _add_problem_flags(study, with_m=False)
    study.add_argument("--levels", type=_levels, default=None,
                       help="comma separated grid sizes, e.g. 8,16,32,64")
    study.add_argument("--evaluation", choices=("exact", "classic"),
                       default="exact",
                       help="quadrature mode for the load and the error "
                            "norms (classic matches reference tables)")
    study.add_argument("--format", choices=("csv", "json"), default="csv")
    study.add_argument("--out", help="output path (default stdout)")

    return parser


def _resolve_eta(args):
    if args.eta is not None:
        return args.eta
    if args.command == "study" and args.dim == 3 and args.space == "s2":
        return 0.1
    return 1.0


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_mesh(args):
    data = mesh_to_json(generate_uniform_mesh(args.dim, args.m))
    _emit(json.dumps(data), args.out)
    return 0


def _cmd_verify(args):
    workers = int(os.environ.get("STRESSFEM_THREADS", "0")) or None
    report = run_all(trials=args.trials, seed=args.seed, max_workers=workers)
    text = report.to_json() if args.format == "json" else report.to_text()
    _emit(text, args.out)
    if not report.passed:
        print("verification failed", file=sys.stderr)
        return 1
    return 0


def _cmd_solve(args):
    material = Material(mu=args.mu, lam=args.lam)
    eta = _resolve_eta(args)
    case = manufactured_case(args.dim, material)
    mesh = generate_uniform_mesh(args.dim, args.m)
    try:
        system = build_saddle_system(
            mesh, args.k, args.space, material=material, eta=eta,
            load=case.load)
        sol = solve_saddle(system)
    except (SolverError, ValueError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    if args.dump_matrices:
        system.export_matrix_market(args.dump_matrices)
    payload = {
        "dim": args.dim, "m": args.m, "k": args.k, "space": args.space,
        "eta": eta, "mu": args.mu, "lambda": args.lam,
        "method": sol.method, "residual": sol.residual,
        "num_stress_dofs": system.num_stress_dofs,
        "num_displacement_dofs": system.num_displacement_dofs,
        "stress": sol.stress.tolist(),
        "displacement": sol.displacement.tolist(),
    }
    _emit(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_study(args):
    material = Material(mu=args.mu, lam=args.lam)
    eta = _resolve_eta(args)
    try:
        report = convergence_study(
            args.dim, args.k, kind=args.space, levels=args.levels, eta=eta,
            material=material, evaluation=args.evaluation)
    except ValueError as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return 1
    _emit(export_report(report, fmt=args.format), args.out)
    if report.failure:
        print(f"study aborted: {report.failure}", file=sys.stderr)
        return 1
    return 0


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "mesh": _cmd_mesh,
        "verify": _cmd_verify,
        "solve": _cmd_solve,
        "study": _cmd_study,
    }[args.command]
    return handler(args)


def main():
    sys.exit(run())
