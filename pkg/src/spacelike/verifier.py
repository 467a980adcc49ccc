"""Named residual checks for the geometric identities of constant-H_k graphs.

Every check returns a :class:`VerificationReport`.  Algebraic identities are
pointwise and must hold to round-off; identities involving derivatives or
integrals hold up to the discretization error, so their tolerance is either
supplied by the caller or taken from :func:`discretization_tolerance`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from . import symfunc
from .discretization import ScalarField, gradient, integrate_values
from .geometry import covariant_hessian, curvature_bundle, elliptic_operator, weingarten_residual

__all__ = [
    "VerificationReport",
    "check_pointwise_identities",
    "check_divergence_free",
    "check_integral_identity",
    "check_p_function",
    "check_k_convexity",
    "check_max_principle",
    "check_weingarten",
    "check_normal_orthogonality",
    "check_theta_gradient",
    "convergence_study",
    "ConvergenceRow",
    "observed_order",
    "discretization_tolerance",
    "boundary_trace",
    "write_reports",
    "read_reports",
    "run_all",
]

ALGEBRAIC_TOL = 1e-9
EXACT_TOL = 1e-9
# Constant in tol = C * h^2 with h the radial step of the unit computational
# square.  Calibrated on the cap and on random graphs, where the observed
# discretization errors stay below 10 h^2 for every derivative-based check.
DISCRETE_CONSTANT = 50.0


@dataclass
class VerificationReport:
    check: str
    residual_max: float
    residual_l2: float
    tolerance: float
    passed: bool = False
    grid: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        self.residual_max = float(self.residual_max)
        self.residual_l2 = float(self.residual_l2)
        self.tolerance = float(self.tolerance)
        if not (math.isfinite(self.residual_max) and self.residual_max >= 0):
            raise ValueError(f"{self.check}: residual_max must be finite and >= 0")
        if not (math.isfinite(self.residual_l2) and self.residual_l2 >= 0):
            raise ValueError(f"{self.check}: residual_l2 must be finite and >= 0")
        self.passed = bool(self.residual_max <= self.tolerance)

    def to_json(self):
        return {"check": self.check, "residual_max": self.residual_max,
                "residual_l2": self.residual_l2, "tolerance": self.tolerance,
                "pass": self.passed, "grid": dict(self.grid), "notes": self.notes}

    @classmethod
    def from_json(cls, doc):
        return cls(check=doc["check"], residual_max=doc["residual_max"],
                   residual_l2=doc["residual_l2"], tolerance=doc["tolerance"],
                   grid=dict(doc.get("grid", {})), notes=doc.get("notes", ""))


def discretization_tolerance(grid, constant=DISCRETE_CONSTANT):
    """Second-order tolerance ``constant * h^2`` for derivative-based checks."""
    return constant * grid.h ** 2


def _grid_info(grid):
    info = grid.describe()
    info["h"] = grid.h
    return info


def _l2(res, grid):
    res = np.asarray(res, dtype=float)
    area = float(np.sum(grid.weights))
    return math.sqrt(max(integrate_values(res ** 2, grid), 0.0) / area)


def _report(check, res, grid, tol, notes=""):
    res = np.abs(np.asarray(res, dtype=float))
    return VerificationReport(check=check, residual_max=float(np.max(res)) if res.size else 0.0,
                              residual_l2=_l2(res, grid), tolerance=tol,
                              grid=_grid_info(grid), notes=notes)


def boundary_trace(values, grid):
    """Values extrapolated to s = 1 from the last three rings (second order)."""
    v = np.asarray(values, dtype=float)
    return 15.0 / 8.0 * v[-1] - 5.0 / 4.0 * v[-2] + 3.0 / 8.0 * v[-3]


# ----------------------------------------------------------------------------
# pointwise identities

def _relative(res, scale):
    return np.abs(res) / np.maximum(1.0, np.abs(scale))


def check_pointwise_identities(bundle, k=None, codazzi_tol=None):
    """Euler, trace and square identities of (sigma_k)_j^i plus raw Codazzi symmetry.

    The first three are algebraic (tolerance 1e-9, relative to the size of the
    terms).  The symmetry ``d_l A[j, i] = d_i A[j, l]`` holds because
    ``A[j, i] = d_i (u_j / W)``; its discrete residual is compared against
    ``codazzi_tol`` (default :func:`discretization_tolerance`).
    """
    k = bundle.k if k is None else int(k)
    grid = bundle.grid
    A = bundle.A
    S = symfunc.sigma_gradient(k, A)
    sig = symfunc.sigmas(A)
    n = A.shape[-1]
    sk = sig[..., k]
    skm1 = sig[..., k - 1]
    sk1 = sig[..., k + 1] if k + 1 <= n else np.zeros_like(sk)
    SA = S @ A
    tr_SA = np.trace(SA, axis1=-2, axis2=-1)
    tr_S = np.trace(S, axis1=-2, axis2=-1)
    tr_SAA = np.trace(SA @ A, axis1=-2, axis2=-1)
    rhs_sq = sig[..., 1] * sk - (k + 1) * sk1
    reports = [
        _report("identity_euler", _relative(tr_SA - k * sk, k * sk), grid, ALGEBRAIC_TOL,
                "tr(S A) = k sigma_k"),
        _report("identity_trace", _relative(tr_S - (n - k + 1) * skm1, (n - k + 1) * skm1), grid,
                ALGEBRAIC_TOL, "tr(S) = (n - k + 1) sigma_(k-1)"),
        _report("identity_square", _relative(tr_SAA - rhs_sq, np.maximum(np.abs(tr_SAA), np.abs(rhs_sq))),
                grid, ALGEBRAIC_TOL, "tr(S A^2) = sigma_1 sigma_k - (k + 1) sigma_(k+1)"),
    ]
    # dA[..., j, i, l] = d_l A[j, i]
    dA = np.stack([np.stack([gradient(A[..., j, i], grid) for i in range(n)], axis=-2)
                   for j in range(n)], axis=-3)
    res = np.max(np.abs(dA - np.swapaxes(dA, -1, -2)), axis=(-3, -2, -1))
    tol = discretization_tolerance(grid) if codazzi_tol is None else float(codazzi_tol)
    reports.append(_report("codazzi_symmetry", res, grid, tol,
                           "d_l h_i^j = d_i h_l^j (raw form); covariant form implied on graphs"))
    return reports


def divergence_residual(bundle, k=None):
    """|sum_i d_i (sigma_k)_j^i| maximized over j, at every node."""
    k = bundle.k if k is None else int(k)
    S = symfunc.sigma_gradient(k, bundle.A)
    grid = bundle.grid
    out = np.zeros(grid.shape)
    for j in range(2):
        div = sum(gradient(S[..., i, j], grid)[..., i] for i in range(2))
        out = np.maximum(out, np.abs(div))
    return out


def check_divergence_free(bundle, k=None, tol=None):
    k = bundle.k if k is None else int(k)
    res = divergence_residual(bundle, k)
    if tol is None:
        tol = 1e-10 if k == 1 else discretization_tolerance(bundle.grid)
    return _report("divergence_free", res, bundle.grid, tol, f"d_i (sigma_{k})_j^i = 0")


def check_weingarten(bundle, tol=None):
    grid = bundle.grid
    res = weingarten_residual(bundle, norm="field")
    tol = discretization_tolerance(grid) if tol is None else tol
    return _report("weingarten", res, grid, tol, "d_i N = h_i^j dX/dx_j")


def check_normal_orthogonality(bundle, tol=1e-10):
    """<N, dX/dx_i> = 0 at every node (algebraic)."""
    N, Du = bundle.N, bundle.Du
    res = np.max(np.abs(N[..., :2] - Du * N[..., 2:3]), axis=-1)
    return _report("normal_orthogonality", res, bundle.grid, tol, "<N, E_i + u_i E_3> = 0")


def check_theta_gradient(bundle, tol=None):
    """d theta / dx_i = -h_i^j u_j with a discrete gradient of theta."""
    grid = bundle.grid
    dtheta = gradient(bundle.theta, grid)
    rhs = -np.einsum("...ji,...j->...i", bundle.A, bundle.Du)
    res = np.max(np.abs(dtheta - rhs), axis=-1)
    tol = discretization_tolerance(grid) if tol is None else tol
    return _report("theta_gradient", res, grid, tol, "d_i theta = -h_i^j u_j")


# ----------------------------------------------------------------------------
# integral identity

def integral_terms(bundle, c, theta0, k=None):
    """The integrals entering the integral identity, as a dict of floats."""
    k = bundle.k if k is None else int(k)
    grid = bundle.grid
    n = 2
    sig = symfunc.sigmas(bundle.A)
    S = symfunc.sigma_gradient(k, bundle.A)
    u = bundle.u
    ckn = k * comb(n, k)
    int_u = integrate_values(u - c, grid)
    int_abs = integrate_values(np.abs(u - c), grid)
    int_theta = integrate_values((bundle.theta - theta0) * sig[..., k - 1], grid)
    dtheta = gradient(bundle.theta, grid)
    xrel = grid.x - np.asarray(grid.star.center)
    flux = np.einsum("...ij,...j,...i->...", S, xrel, dtheta)
    int_flux = integrate_values(flux, grid)
    return {"k": k, "ckn": ckn, "int_u": int_u, "int_abs_u": int_abs,
            "int_theta_sigma": int_theta, "int_flux": int_flux,
            "Hk_mean": integrate_values(bundle.Hk, grid) / float(np.sum(grid.weights))}


def check_integral_identity(bundle, c, theta0, k=None, tol=1e-3, precondition_tol=None):
    """Integral identity, its flux sub-identity and the hypotheses they need.

    Returns three reports, in order: ``integral_identity`` (normalized by
    ``k C(n,k) int |u - c|``), ``integral_flux`` and ``integral_preconditions``.
    The first identity assumes H_k = 1; the flux identity is scaled by the
    mean of H_k.  When the preconditions fail the identity residuals are still
    computed and their notes say so; the preconditions report fails.
    """
    k = bundle.k if k is None else int(k)
    grid = bundle.grid
    t = integral_terms(bundle, c, theta0, k)
    ckn, n = t["ckn"], 2
    scale = ckn * t["int_abs_u"]
    if scale == 0.0:
        scale = 1.0
    hk = t["Hk_mean"]
    main = abs(ckn * t["int_u"] + (n - k + 1) * t["int_theta_sigma"]) / scale
    # d_i theta (sigma_k)_j^i x_j integrates, by the divergence theorem, to
    # k sigma_k int (u - c)
    sub = abs(t["int_flux"] - ckn * hk * t["int_u"]) / scale

    pre_tol = discretization_tolerance(grid) if precondition_tol is None else precondition_tol
    hk_drift = np.abs(bundle.Hk - hk)
    bdry_u = np.abs(boundary_trace(bundle.u, grid) - c)
    bdry_theta = np.abs(boundary_trace(bundle.theta, grid) - theta0)
    drift = max(float(np.max(hk_drift)) / max(abs(hk), 1e-300),
                float(np.max(bdry_u)), float(np.max(bdry_theta)))
    pre_ok = drift <= pre_tol
    pre_note = (f"max relative H_k drift {np.max(hk_drift) / max(abs(hk), 1e-300):.3e}, "
                f"max |u - c| on boundary {np.max(bdry_u):.3e}, "
                f"max |theta - theta0| on boundary {np.max(bdry_theta):.3e}")
    flag = "" if pre_ok else "; precondition-failed"
    info = _grid_info(grid)
    return [
        VerificationReport("integral_identity", main, main, tol, grid=info,
                           notes=f"k C(n,k) int(u-c) + (n-k+1) int(theta-theta0) sigma_(k-1){flag}"),
        VerificationReport("integral_flux", sub, sub, tol, grid=info,
                           notes=f"int (sigma_k)_j^i x_j d_i theta - k C(n,k) H_k int(u-c){flag}"),
        VerificationReport("integral_preconditions", drift, drift, pre_tol, grid=info, notes=pre_note),
    ]


# ----------------------------------------------------------------------------
# P-function

def p_hessian_residual(bundle):
    """Pointwise residual of the covariant Hessian identity for P."""
    grid = bundle.grid
    P = ScalarField(grid, bundle.P)
    lhs = covariant_hessian(bundle, P)
    A, G = bundle.A, bundle.Gamma
    hgh = bundle.h @ bundle.ginv @ bundle.h
    # dA[..., l, i, j] = d_j A[l, i]
    dA = np.stack([np.stack([gradient(A[..., l, i], grid) for i in range(2)], axis=-2)
                   for l in range(2)], axis=-3)
    nabla_A = (dA + np.einsum("...ljm,...mi->...lij", G, A)
               - np.einsum("...mji,...lm->...lij", G, A))
    third = np.einsum("...lij,...l->...ij", nabla_A, bundle.Du)
    rhs = (bundle.h - hgh) * bundle.theta[..., None, None] + third
    return np.max(np.abs(lhs - rhs), axis=(-2, -1))


def p_operator(bundle):
    """(sigma_k)_j^i nabla_i nabla^j P at every node."""
    return elliptic_operator(bundle, ScalarField(bundle.grid, bundle.P))


def check_p_function(bundle, k=None, tol=None):
    """Hessian identity for P, subsolution sign and the lower bound for sigma_(k-1)."""
    k = bundle.k if k is None else int(k)
    grid = bundle.grid
    tol = discretization_tolerance(grid) if tol is None else float(tol)
    reports = [_report("p_hessian", p_hessian_residual(bundle), grid, tol,
                       "nabla^2 P = (h - h h) theta + nabla h . Du")]
    inside, _ = symfunc.in_gamma_k(bundle.A, k)
    if np.all(inside):
        L = p_operator(bundle)
        worst = float(max(0.0, -np.min(L)))
        reports.append(VerificationReport(
            "p_subsolution", worst, _l2(np.maximum(-L, 0.0), grid), tol, grid=_grid_info(grid),
            notes=f"min (sigma_k) nabla^2 P = {np.min(L):.6e}, max = {np.max(L):.6e}"))
    else:
        frac_out = 1.0 - float(np.mean(inside))
        reports.append(VerificationReport(
            "p_subsolution", frac_out, frac_out, 0.0, grid=_grid_info(grid),
            notes=f"skipped: A outside Gamma_{k} at {int(np.sum(~inside))} nodes"))
    sig = symfunc.sigmas(bundle.A)
    hk = np.maximum(bundle.Hk, 0.0)
    margin = sig[..., k - 1] - comb(2, k - 1) * hk ** ((k - 1) / k)
    reports.append(VerificationReport(
        "p_sigma_lower_bound", float(max(0.0, -np.min(margin))),
        _l2(np.maximum(-margin, 0.0), grid), tol, grid=_grid_info(grid),
        notes=f"min sigma_(k-1) - C(n,k-1) H_k^((k-1)/k) = {np.min(margin):.6e}"))
    return reports


# ----------------------------------------------------------------------------
# cone and maximum principle

def check_k_convexity(bundle, k=None):
    """Fraction of nodes outside Gamma_k; passes only when every node is inside."""
    k = bundle.k if k is None else int(k)
    inside, margin = symfunc.in_gamma_k(bundle.A, k)
    frac_out = 1.0 - float(np.mean(inside))
    grid = bundle.grid
    return VerificationReport("k_convexity", frac_out, frac_out, 0.0, grid=_grid_info(grid),
                              notes=f"fraction inside {1.0 - frac_out:.6f}, "
                                    f"worst margin {float(np.min(margin)):.6e}")


def check_max_principle(bundle, c):
    """u < c strictly at every node (tolerance 0)."""
    excess = np.asarray(bundle.u) - c
    worst = float(np.max(excess))
    res = max(0.0, worst) if worst < 0 else max(worst, np.finfo(float).tiny)
    grid = bundle.grid
    return VerificationReport("max_principle", res, _l2(np.maximum(excess, 0.0), grid), 0.0,
                              grid=_grid_info(grid),
                              notes=f"max(u - c) = {worst:.6e}")


# ----------------------------------------------------------------------------
# convergence

@dataclass
class ConvergenceRow:
    check: str
    nr: int
    nphi: int
    h: float
    residual: float
    order: float = None


def observed_order(hs, residuals):
    """Least-squares slope of log residual against log h; None when all are exact."""
    hs = np.asarray(hs, dtype=float)
    r = np.asarray(residuals, dtype=float)
    if np.all(r <= EXACT_TOL):
        return None
    r = np.maximum(r, np.finfo(float).tiny)
    slope, _ = np.polyfit(np.log(hs), np.log(r), 1)
    return float(slope)


def convergence_study(make_bundle, sizes, checks):
    """Residuals of named checks over a doubling sequence of grids.

    ``make_bundle(nr, nphi)`` builds a bundle, ``sizes`` is a list of
    ``(nr, nphi)`` pairs (at least three, each doubling the previous) and
    ``checks`` maps a name to ``bundle -> float``.  Returns the rows and a
    dict ``name -> order`` (``None`` when every residual is at most 1e-9,
    reported as exact).
    """
    sizes = [tuple(int(v) for v in s) for s in sizes]
    if len(sizes) < 3:
        raise ValueError("a convergence study needs at least three grids")
    for (a, b), (c, d) in zip(sizes, sizes[1:]):
        if c != 2 * a or d != 2 * b:
            raise ValueError("grid sizes must form a doubling sequence")
    rows = []
    for nr, nphi in sizes:
        bundle = make_bundle(nr, nphi)
        for name, fn in checks.items():
            rows.append(ConvergenceRow(name, nr, nphi, bundle.grid.h, float(fn(bundle))))
    orders = {}
    for name in checks:
        sel = [r for r in rows if r.check == name]
        orders[name] = observed_order([r.h for r in sel], [r.residual for r in sel])
        for r in sel:
            r.order = orders[name]
    return rows, orders


# ----------------------------------------------------------------------------
# orchestration and I/O

def run_all(bundle, c=None, theta0=None, k=None):
    """Every applicable check, sorted by check name."""
    k = bundle.k if k is None else int(k)
    reports = list(check_pointwise_identities(bundle, k))
    reports.append(check_divergence_free(bundle, k))
    reports.append(check_weingarten(bundle))
    reports.append(check_normal_orthogonality(bundle))
    reports.append(check_theta_gradient(bundle))
    reports.extend(check_p_function(bundle, k))
    reports.append(check_k_convexity(bundle, k))
    if c is not None:
        reports.append(check_max_principle(bundle, c))
        if theta0 is not None:
            reports.extend(check_integral_identity(bundle, c, theta0, k))
    return sorted(reports, key=lambda r: r.check)


def reports_to_json(reports):
    return json.dumps([r.to_json() for r in reports], sort_keys=True, allow_nan=False, indent=1)


def write_reports(reports, path):
    Path(path).write_text(reports_to_json(reports) + "\n")


def read_reports(path):
    return [VerificationReport.from_json(d) for d in json.loads(Path(path).read_text())]

