"""Command-line front end.

Exit codes: 0 success (all checks pass), 1 a verification check failed,
2 invalid input, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import verifier
from .discretization import (BallDomain, StarDomain2D, build_grid, domain_from_json, read_field,
                             write_field)
from .exceptions import NonConvergenceError, SpacelikeError
from .geometry import curvature_bundle, write_bundle
from .hyperboloid import cap_from_angle, cap_grid
from .solver import SolverConfig, ellipse_family, rigidity_scan, solve_dirichlet, solve_radial

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3

REPORT_CSV_HEADER = ("check", "residual_max", "residual_l2", "tolerance", "pass", "nr", "nphi",
                     "notes")


class InputError(Exception):
    """Command-line values that violate a precondition."""


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)


# ----------------------------------------------------------------------------
# output

def _dump(obj):
    return json.dumps(obj, sort_keys=True, allow_nan=False, indent=1) + "\n"


def emit_report(reports, fmt="json", path=None):
    """Serialize verification reports as JSON (sorted keys) or CSV.

    Returns the text; writes it to ``path`` when given.
    """
    if fmt == "json":
        text = _dump([r.to_json() for r in reports])
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_CSV_HEADER)
        for r in reports:
            writer.writerow([r.check, repr(r.residual_max), repr(r.residual_l2), repr(r.tolerance),
                             "true" if r.passed else "false", r.grid.get("nr", ""),
                             r.grid.get("nphi", ""), r.notes])
        text = buf.getvalue()
    else:
        raise InputError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _write_or_print(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ----------------------------------------------------------------------------
# argument helpers

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _theta0(args):
    if getattr(args, "radius_cap", None) is not None:
        if args.theta0 is not None:
            raise InputError("give either --theta0 or --radius, not both")
        if not args.radius_cap >= 0:
            raise InputError("--radius must be non-negative")
        return -math.sqrt(1.0 + args.radius_cap ** 2)
    if args.theta0 is None:
        return -math.sqrt(2.0)
    return args.theta0


def _add_grid(p, nr=64, nphi=128):
    p.add_argument("--nr", type=int, default=nr, help=f"radial nodes (count, default {nr})")
    p.add_argument("--nphi", type=int, default=nphi,
                   help=f"angular nodes, even (count, default {nphi})")


def _add_domain(p):
    p.add_argument("--domain", choices=("disk", "ellipse", "star"), default="disk",
                   help="domain family (default disk)")
    p.add_argument("--radius", type=float, default=1.0,
                   help="disk radius (length units, default 1)")
    p.add_argument("--a", type=float, default=1.0,
                   help="ellipse semi-axis along x1 (length units, default 1)")
    p.add_argument("--b", type=float, default=0.8,
                   help="ellipse semi-axis along x2 (length units, default 0.8)")
    p.add_argument("--a0", type=float, default=1.0,
                   help="star domain mean radius (length units, default 1)")
    p.add_argument("--cos", type=_floats, default=[],
                   help="star domain cosine coefficients of rho (length units, default none)")
    p.add_argument("--sin", type=_floats, default=[],
                   help="star domain sine coefficients of rho (length units, default none)")
    p.add_argument("--center", type=_floats, default=[0.0, 0.0],
                   help="domain centre x1,x2 (length units, default 0,0)")
    p.add_argument("--domain-file", default=None,
                   help="JSON domain description; overrides the flags above (default none)")


def _domain(args):
    if args.domain_file:
        return domain_from_json(json.loads(Path(args.domain_file).read_text()))
    if len(args.center) != 2:
        raise InputError("--center needs two coordinates")
    if args.domain == "disk":
        return BallDomain(2, args.center, args.radius)
    if args.domain == "ellipse":
        return StarDomain2D.ellipse(args.a, args.b, center=args.center)
    return StarDomain2D(center=args.center, a0=args.a0, cos=args.cos, sin=args.sin)


# ----------------------------------------------------------------------------
# subcommands

def _cmd_hyperboloid(args):
    theta0 = _theta0(args)
    cap = cap_from_angle(args.n, args.c, theta0)
    summary = cap.to_json()
    summary["apex"] = cap.apex
    summary["P"] = -cap.c - cap.theta0
    if args.n == 2 and not cap.degenerate and args.out:
        write_field(cap_grid(cap, args.nr, args.nphi), args.out)
    _write_or_print(_dump(summary), args.summary)
    return EXIT_OK


def _cmd_curvature(args):
    f = read_field(args.field)
    bundle = curvature_bundle(f, args.k, boundary_value=args.c)
    write_bundle(bundle, args.out)
    return EXIT_OK


def _bundle_for_verify(args):
    if args.case == "hyperboloid":
        theta0 = _theta0(args)
        cap = cap_from_angle(2, args.c, theta0)
        if cap.degenerate:
            raise InputError("theta0 = -1 gives an empty domain")
        return curvature_bundle(cap_grid(cap, args.nr, args.nphi), args.k), args.c, theta0
    if not args.field:
        raise InputError("--case field needs --field")
    f = read_field(args.field)
    return curvature_bundle(f, args.k, boundary_value=args.c), args.c, args.theta0


def _cmd_verify(args):
    bundle, c, theta0 = _bundle_for_verify(args)
    reports = verifier.run_all(bundle, c, theta0, args.k)
    text = emit_report(reports, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    failed = [r.check for r in reports if not r.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _cmd_solve(args):
    config = SolverConfig(k=args.k, hk=args.hk, domain=_domain(args), c=args.c, nr=args.nr,
                          nphi=args.nphi, tol=args.tol, max_iter=args.max_iter)
    result = solve_dirichlet(config)
    if args.out:
        write_field(result.field, args.out)
    _write_or_print(_dump(result.summary()), args.summary)
    return EXIT_OK


def _cmd_radial(args):
    profile = solve_radial(args.n, args.k, args.hk, args.R, args.c, points=args.points)
    doc = profile.to_json()
    doc["max_error_vs_closed_form"] = profile.max_error()
    doc["u_center"] = profile.center_value
    _write_or_print(_dump(doc), args.out)
    return EXIT_OK


def _cmd_scan(args):
    aspects = args.aspects
    if any(a < 1 for a in aspects):
        raise InputError("aspect ratios must be >= 1")
    scan = rigidity_scan(ellipse_family(aspects), k=args.k, hk=args.hk, c=args.c, nr=args.nr,
                         nphi=args.nphi, asymmetries=aspects, tol=args.tol)
    _write_or_print(scan.to_csv(), args.out)
    print(f"spread {'increases' if scan.monotone else 'is not monotone'} with asymmetry",
          file=sys.stderr)
    return EXIT_OK


def _cmd_convergence(args):
    sizes = [(nr, 2 * nr) for nr in args.sizes]
    theta0 = _theta0(args)
    cap = cap_from_angle(2, args.c, theta0)
    k = args.k

    def make(nr, nphi):
        return curvature_bundle(cap_grid(cap, nr, nphi), k)

    checks = {
        "shape_operator": lambda b: float(np.max(np.abs(b.A - np.eye(2)))),
        "hk": lambda b: float(np.max(np.abs(b.Hk - 1.0))),
        "p_spread": lambda b: float(np.ptp(b.P)),
        "weingarten": lambda b: verifier.check_weingarten(b).residual_max,
        "divergence_free": lambda b: verifier.check_divergence_free(b, k).residual_max,
        "integral_identity": lambda b: verifier.check_integral_identity(b, args.c, theta0, k)[0].residual_max,
        "identity_euler": lambda b: verifier.check_pointwise_identities(b, k)[0].residual_max,
    }
    rows, orders = verifier.convergence_study(make, sizes, checks)
    doc = {"orders": {name: ("exact" if o is None else o) for name, o in orders.items()},
           "rows": [{"check": r.check, "nr": r.nr, "nphi": r.nphi, "h": r.h, "residual": r.residual}
                    for r in rows]}
    _write_or_print(_dump(doc), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="spacelike",
        description="Constant-H_k spacelike graphs in R^{2,1}: geometry, verification, solvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hyperboloid", help="sample the hyperboloid cap on a polar grid")
    p.add_argument("--theta0", type=float, default=None,
                   help="intersection angle <N, E_3> <= -1 (dimensionless, default -sqrt 2)")
    p.add_argument("--radius", dest="radius_cap", type=float, default=None,
                   help="ball radius R; sets theta0 = -sqrt(1 + R^2) (length units)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    p.add_argument("--n", type=int, default=2, help="dimension of the domain (count, default 2)")
    _add_grid(p)
    p.add_argument("--out", default=None, help="field JSON output path (n = 2 only, default none)")
    p.add_argument("--summary", default=None, help="summary JSON path (default stdout)")

    p = sub.add_parser("curvature", help="compute the geometric fields of a graph")
    p.add_argument("--field", required=True, help="field JSON input path")
    p.add_argument("--k", type=int, default=1, help="index of H_k stored (1 or 2, default 1)")
    p.add_argument("--c", type=float, default=None,
                   help="Dirichlet value at the boundary (length units, default none)")
    p.add_argument("--out", required=True, help="bundle JSON output path")

    p = sub.add_parser("verify", help="run every residual check on a graph")
    p.add_argument("--case", choices=("hyperboloid", "field"), default="hyperboloid",
                   help="sampled cap or a field file (default hyperboloid)")
    p.add_argument("--field", default=None, help="field JSON input path for --case field")
    p.add_argument("--theta0", type=float, default=None,
                   help="boundary angle (dimensionless, default -sqrt 2 for the cap)")
    p.add_argument("--radius", dest="radius_cap", type=float, default=None,
                   help="cap ball radius; sets theta0 = -sqrt(1 + R^2) (length units)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    p.add_argument("--k", type=int, default=1, help="curvature index (1 or 2, default 1)")
    _add_grid(p)
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="report format (default json)")
    p.add_argument("--out", default=None, help="report output path (default stdout)")

    p = sub.add_parser("solve", help="solve the constant-H_k Dirichlet problem on a planar domain")
    _add_domain(p)
    p.add_argument("--k", type=int, default=1, help="curvature index (1 or 2, default 1)")
    p.add_argument("--hk", type=float, default=1.0,
                   help="prescribed H_k (inverse length^k, default 1)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    _add_grid(p)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="Newton tolerance on max residual (default 1e-10)")
    p.add_argument("--max-iter", type=int, default=50, help="Newton iteration cap (default 50)")
    p.add_argument("--out", default=None, help="solution field JSON path (default none)")
    p.add_argument("--summary", default=None, help="summary JSON path (default stdout)")

    p = sub.add_parser("radial-solve", help="radially symmetric solution over a ball in R^n")
    p.add_argument("--n", type=int, default=2, help="dimension (count, default 2)")
    p.add_argument("--k", type=int, default=1, help="curvature index, 1 <= k <= n (default 1)")
    p.add_argument("--hk", type=float, default=1.0,
                   help="prescribed H_k (inverse length^k, default 1)")
    p.add_argument("--R", type=float, default=1.0, help="ball radius (length units, default 1)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    p.add_argument("--points", type=int, default=32,
                   help="initial Chebyshev degree (count, default 32)")
    p.add_argument("--out", default=None, help="profile JSON path (default stdout)")

    p = sub.add_parser("rigidity-scan", help="boundary-angle spread over a family of ellipses")
    p.add_argument("--aspects", type=_floats, default=[1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
                   help="aspect ratios a/b with a = 1 (dimensionless, default 1.0,...,1.5)")
    p.add_argument("--k", type=int, default=1, help="curvature index (1 or 2, default 1)")
    p.add_argument("--hk", type=float, default=1.0,
                   help="prescribed H_k (inverse length^k, default 1)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    _add_grid(p)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="Newton tolerance on max residual (default 1e-10)")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")

    p = sub.add_parser("convergence", help="refinement study of the checks on the cap")
    p.add_argument("--theta0", type=float, default=None,
                   help="cap angle (dimensionless, default -sqrt 2)")
    p.add_argument("--radius", dest="radius_cap", type=float, default=None,
                   help="cap ball radius; sets theta0 = -sqrt(1 + R^2) (length units)")
    p.add_argument("--c", type=float, default=0.0, help="boundary height (length units, default 0)")
    p.add_argument("--k", type=int, default=2, help="curvature index (1 or 2, default 2)")
    p.add_argument("--sizes", type=_ints, default=[32, 64, 128],
                   help="radial node counts, each doubling the last; nphi = 2 nr "
                        "(default 32,64,128)")
    p.add_argument("--out", default=None, help="table JSON path (default stdout)")
    return parser


_COMMANDS = {
    "hyperboloid": _cmd_hyperboloid,
    "curvature": _cmd_curvature,
    "verify": _cmd_verify,
    "solve": _cmd_solve,
    "radial-solve": _cmd_radial,
    "rigidity-scan": _cmd_scan,
    "convergence": _cmd_convergence,
}


def run(argv=None):
    """Parse ``argv`` and dispatch; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SpacelikeError, InputError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
