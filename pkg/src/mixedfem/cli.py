"""Command line interface: ``solve``, ``study`` and ``verify``.

Exit codes: 0 on success, 1 when a verification check fails, 2 when a
solve fails (singular system, bad mesh, invalid input).
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .cases import CASES, DEFAULT_CASE, get_case
from .linalg import SingularSystemError
from .mesh import MeshError
from .problems import BC_MODES
from .study import (
    LABEL,
    PROBLEM_NORMS,
    StudyError,
    emit_table,
    error_norms,
    make_mesh,
    run_study,
    solve_case,
)

EXIT_OK, EXIT_TOLERANCE, EXIT_SOLVER = 0, 1, 2

PROBLEMS = ("vlap", "biharmonic", "stokes")


def parse_mesh(text):
    """``uniform:N`` or ``perturbed:N:SEED`` -> (kind, n, seed)."""
    parts = text.split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 2:
            return "uniform", int(parts[1]), 0
        if parts[0] == "perturbed" and len(parts) in (2, 3):
            return "perturbed", int(parts[1]), int(parts[2]) if len(parts) == 3 else 0
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad mesh {text!r}; use uniform:N or perturbed:N:SEED")


def parse_levels(text):
    try:
        levels = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError("empty level list")
    return levels


def _resolve_case(problem, bc, name):
    if problem != "vlap" and bc != "dirichlet":
        raise ValueError(f"{problem} is only posed with --bc dirichlet")
    if name is None:
        try:
            name = DEFAULT_CASE[(problem, bc)]
        except KeyError:
            raise ValueError(f"no default case for problem={problem} bc={bc}; "
                             f"pass --case (known: {', '.join(sorted(CASES))})") from None
    case = get_case(name)
    if case.problem != problem:
        raise ValueError(f"case {name!r} is a {case.problem} case, not {problem}")
    return case


def _fields(solution):
    out = {}
    for key in ("sigma_h", "u_h", "p_h", "U_h"):
        fn = getattr(solution, key, None)
        if fn is not None:
            out[key] = fn.coeffs
    return out


def cmd_solve(args):
    kind, n, seed = args.mesh
    case = _resolve_case(args.problem, args.bc, args.case)
    mesh = make_mesh(kind, n, seed)
    sol = solve_case(args.problem, args.bc, args.degree, mesh, case)
    errs = error_norms(sol, case, PROBLEM_NORMS[args.problem])
    print(f"case={case.name} problem={args.problem} bc={args.bc} r={args.degree} "
          f"mesh={kind}:{n} h={mesh.h_max:.4g}")
    for k, v in errs.items():
        print(f"  {LABEL[k]:<16} {v:.4e}")
    if args.dump_fields:
        np.savez(args.dump_fields, vertices=mesh.vertices, triangles=mesh.triangles,
                 degree=args.degree, **_fields(sol))
        print(f"fields written to {args.dump_fields}")
    return EXIT_OK


def cmd_study(args):
    case = _resolve_case(args.problem, args.bc, args.case)
    report = run_study(args.problem, args.bc, args.degree, args.levels,
                       mesh_kind=args.mesh_kind, case=case, seed=args.seed)
    text = emit_table(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_suite

    kwargs = {"max_level": args.max_level} if args.suite == "golden-tables" else {}
    checks = run_suite(args.suite, **kwargs)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_TOLERANCE if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mixedfem", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one manufactured case and report errors")
    s.add_argument("--problem", choices=PROBLEMS, required=True)
    s.add_argument("--bc", choices=BC_MODES, default="dirichlet")
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--mesh", type=parse_mesh, default=("uniform", 16, 0),
                   help="uniform:N or perturbed:N:SEED (default uniform:16)")
    s.add_argument("--case", choices=sorted(CASES), help="manufactured case")
    s.add_argument("--dump-fields", metavar="PATH", help="write coefficients to an .npz file")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("study", help="convergence study over mesh levels")
    s.add_argument("--problem", choices=PROBLEMS, required=True)
    s.add_argument("--bc", choices=BC_MODES, default="dirichlet")
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--levels", type=parse_levels, default=[16, 32, 64, 128])
    s.add_argument("--mesh-kind", choices=("uniform", "perturbed"), default="uniform")
    s.add_argument("--seed", type=int, default=0, help="perturbation seed")
    s.add_argument("--case", choices=sorted(CASES))
    s.add_argument("--format", choices=("csv", "markdown"), default="csv")
    s.add_argument("--out", metavar="PATH")
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("verify", help="run a self-check suite")
    s.add_argument("--suite", choices=("projections", "sequences", "golden-tables"),
                   required=True)
    s.add_argument("--max-level", type=int, default=None,
                   help="golden tables: only compare levels up to this n")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SingularSystemError, StudyError, MeshError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
