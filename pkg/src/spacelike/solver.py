"""Constant-H_k Dirichlet problems for spacelike graphs.

Two solvers live here:

* :func:`solve_radial` reduces ``sigma_k(A) = C(n, k) H_k`` over a ball to an
  ODE for ``w = u' / sqrt(1 - u'^2)`` and solves it by Chebyshev collocation
  with Newton's method.  With ``v = w / r`` the tangential curvatures are
  ``v`` (multiplicity n - 1) and the radial one is ``w' = v + r v'``.
* :func:`solve_dirichlet` solves the planar problem on a polar grid with a
  damped Newton method.  The residual is ``F(u) = sigma_k(A[u]) - C(2, k) H_k``
  with ``u = c`` imposed through the ghost node at ``s = 1``.

The grid solver iterates on the correction ``v = u - u_init``.  Derivatives
are affine in the nodal values, so the derivatives of ``u_init`` are formed
once and rounding in later evaluations scales with ``|v|`` instead of
``|u|``; near the centre the angular second derivative amplifies rounding by
about ``(nphi / 2)^2 / s_0^2``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.polynomial import Chebyshev

from . import symfunc
from .discretization import (BallDomain, ScalarField, StarDomain2D, _angular_derivatives,
                             _D1_OUTER_BV, _D2_OUTER_BV, build_grid,
                             derivatives)
from .exceptions import ConePreconditionError, NonConvergenceError
from .geometry import SPACELIKE_EPS, curvature_bundle
from .verifier import boundary_trace

__all__ = [
    "SolverConfig",
    "SolveResult",
    "AngleStats",
    "RadialProfile",
    "solve_radial",
    "radial_closed_form",
    "solve_dirichlet",
    "boundary_angle_stats",
    "angle_stats",
    "center_value",
    "rigidity_scan",
    "ScanRow",
    "ScanResult",
    "ellipse_family",
    "SCAN_HEADER",
]

# rings reached by the last ring's boundary closure
TAIL = 5

SCAN_HEADER = ("asymmetry", "spread", "theta_mean", "u_min", "iterations", "converged")


# ----------------------------------------------------------------------------
# radial reduction

def radial_closed_form(r, n, k, hk, R, c=0.0):
    """u(r) = c + (sqrt(1 + kappa^2 r^2) - sqrt(1 + kappa^2 R^2)) / kappa, kappa = H_k^(1/k).

    Integrating (r^(n-k) w^k)' = n H_k r^(n-1) with w(0) = 0 gives w = kappa r
    for every n and k: a hyperboloid with all principal curvatures kappa.
    """
    kappa = hk ** (1.0 / k)
    r = np.asarray(r, dtype=float)
    # rationalized to avoid cancellation as H_k -> 0
    return c + kappa * (r * r - R * R) / (np.sqrt(1.0 + (kappa * r) ** 2)
                                          + math.sqrt(1.0 + (kappa * R) ** 2))


@dataclass
class RadialProfile:
    """Radial solution on Chebyshev points of [0, R]."""

    n: int
    k: int
    hk: float
    R: float
    c: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    residual: float
    collocation_residual: float
    points: int
    iterations: int
    series: Chebyshev = field(repr=False, default=None)

    def __call__(self, r):
        """u at arbitrary radii in [0, R] (spectral interpolation)."""
        return self.series(np.asarray(r, dtype=float))

    @property
    def center_value(self):
        return float(self.series(0.0))

    def exact(self, r=None):
        return radial_closed_form(self.r if r is None else r, self.n, self.k, self.hk, self.R, self.c)

    def max_error(self, samples=401):
        r = np.linspace(0.0, self.R, samples)
        return float(np.max(np.abs(self(r) - self.exact(r))))

    def to_json(self):
        return {"n": self.n, "k": self.k, "hk": self.hk, "R": self.R, "c": self.c,
                "r": self.r.tolist(), "u": self.u.tolist(), "du": self.du.tolist(),
                "residual": self.residual, "points": self.points}


def _cheb_points(N, R):
    """Chebyshev-Lobatto points on [0, R] (increasing) and the differentiation matrix."""
    j = np.arange(N + 1)
    t = np.cos(np.pi * j / N)
    cw = np.ones(N + 1)
    cw[0] = cw[-1] = 2.0
    cw = cw * (-1.0) ** j
    dt = t[:, None] - t[None, :] + np.eye(N + 1)
    D = np.outer(cw, 1.0 / cw) / dt
    D = D - np.diag(np.sum(D, axis=1))
    # r = R (1 - t) / 2 increases with j
    return R * (1.0 - t) / 2.0, -2.0 / R * D


def _radial_sigma(n, k, v, wp):
    """sigma_k of (w', v, ..., v) with v repeated n - 1 times."""
    return comb(n - 1, k) * v ** k + comb(n - 1, k - 1) * v ** (k - 1) * wp


def _radial_newton(n, k, hk, R, N, tol, max_iter):
    r, D = _cheb_points(N, R)
    target = comb(n, k) * hk
    # start above the root of v^k = H_k so that Newton approaches it monotonically
    v = np.full(N + 1, 1.0 + hk ** (1.0 / k))
    a, b = comb(n - 1, k), comb(n - 1, k - 1)
    history = []
    for it in range(1, max_iter + 1):
        dv = D @ v
        wp = v + r * dv
        E = _radial_sigma(n, k, v, wp) - target
        history.append(float(np.max(np.abs(E))))
        if history[-1] <= tol * max(1.0, target):
            return r, v, history, it - 1
        dE = k * a * v ** (k - 1) + b * (k * v ** (k - 1) + ((k - 1) * v ** (k - 2) * r * dv if k > 1 else 0.0))
        J = np.diag(dE) + (b * v ** (k - 1) * r)[:, None] * D
        step = np.linalg.solve(J, -E)
        v = v + step
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise NonConvergenceError(
                "radial Newton iterate left the admissible region (v = w / r must stay positive)",
                history, {"n": n, "k": k, "hk": hk, "R": R, "points": N})
    raise NonConvergenceError("radial Newton did not converge", history,
                              {"n": n, "k": k, "hk": hk, "R": R, "points": N})


def _radial_ode_residual(vseries, n, k, hk, R, samples=257):
    """max |sigma_k(lambda) - C(n, k) H_k| / max(1, C(n, k) H_k) on a fine grid of [0, R].

    Uses the interpolant of v = w / r: lambda_tan = v, lambda_rad = v + r v'.
    """
    r = np.linspace(0.0, R, samples)
    v = vseries(r)
    wp = v + r * vseries.deriv(1)(r)
    target = comb(n, k) * hk
    return float(np.max(np.abs(_radial_sigma(n, k, v, wp) - target)) / max(1.0, target))


def _tail(series):
    coef = np.abs(series.coef)
    return float(np.max(coef[-3:]) / max(np.max(coef), 1e-300))


def solve_radial(n, k, hk, R, c=0.0, points=32, tol=1e-10, max_iter=50, max_points=1024):
    """Radially symmetric solution of sigma_k(A) = C(n, k) H_k over B_R with u(R) = c.

    The collocation degree starts at ``points`` and doubles until the ODE
    residual on a fine grid, relative to ``max(1, C(n, k) H_k)``, is at most
    ``tol`` and the Chebyshev series of u' is resolved (trailing
    coefficients below 1e-14 of the largest).
    """
    if int(n) != n or n < 1 or int(k) != k or not 1 <= k <= n:
        raise ValueError(f"need integers 1 <= k <= n, got n={n}, k={k}")
    if not (hk > 0 and math.isfinite(hk)):
        raise ValueError(f"H_k must be positive, got {hk}")
    if not (R > 0 and math.isfinite(R)):
        raise ValueError(f"R must be positive, got {R}")
    n, k = int(n), int(k)
    N = int(points)
    while True:
        r, v, history, iterations = _radial_newton(n, k, hk, R, N, tol, max_iter)
        vseries = Chebyshev.fit(r, v, deg=N, domain=[0.0, R])
        w = r * v
        du = w / np.sqrt(1.0 + w * w)
        slope = Chebyshev.fit(r, du, deg=N, domain=[0.0, R])
        residual = _radial_ode_residual(vseries, n, k, hk, R)
        resolved = _tail(slope) <= 1e-14
        if (residual <= tol and resolved) or 2 * N > max_points:
            break
        N *= 2
    if not (residual <= tol and resolved):
        raise NonConvergenceError(
            f"radial solution not resolved at {N} points (ODE residual {residual:.3e})",
            history, {"n": n, "k": k, "hk": hk, "R": R, "points": N})
    anti = slope.integ()
    series = anti - anti(R) + c
    return RadialProfile(n=n, k=k, hk=float(hk), R=float(R), c=float(c), r=r, u=series(r), du=du,
                         residual=residual, collocation_residual=history[-1], points=N,
                         iterations=iterations, series=series)


# ----------------------------------------------------------------------------
# configuration and results

@dataclass
class SolverConfig:
    k: int = 1
    hk: float = 1.0
    domain: object = None
    c: float = 0.0
    nr: int = 64
    nphi: int = 128
    n: int = 2
    tol: float = 1e-10
    max_iter: int = 50
    damping: str = "halving"
    min_step: float = 2.0 ** -20
    eps: float = SPACELIKE_EPS
    cone_guard: bool = True
    jacobian: str = "factored"

    def __post_init__(self):
        if self.domain is None:
            self.domain = BallDomain(2, None, 1.0)
        if self.n != 2:
            raise ValueError("the grid solver handles n = 2 only; use solve_radial for balls")
        if int(self.k) != self.k or not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}")
        self.k = int(self.k)
        if not (self.hk > 0 and math.isfinite(self.hk)):
            raise ValueError(f"H_k must be positive, got {self.hk}")
        for name in ("tol", "min_step", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.nr < 8 or self.nphi < 8:
            raise ValueError("the grid solver needs nr >= 8 and nphi >= 8")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.damping != "halving":
            raise ValueError(f"unknown damping rule {self.damping!r}")
        if self.jacobian not in ("factored", "colored"):
            raise ValueError(f"unknown Jacobian method {self.jacobian!r}")
        if not isinstance(self.domain, (BallDomain, StarDomain2D)):
            raise ValueError("domain must be a BallDomain or StarDomain2D")

    @property
    def target(self):
        return comb(self.n, self.k) * self.hk


@dataclass
class AngleStats:
    mean: float
    min: float
    max: float
    spread: float

    def to_json(self):
        return {"mean": self.mean, "min": self.min, "max": self.max, "spread": self.spread}


@dataclass
class SolveResult:
    field: ScalarField
    residual_max: float
    iterations: int
    history: list
    angle: AngleStats
    gamma_margin: float
    spacelike_margin: float
    config: SolverConfig
    initial_guess: str = ""
    seconds: float = 0.0
    converged: bool = True

    @property
    def grid(self):
        return self.field.grid

    @property
    def u(self):
        return self.field.values

    @property
    def u_min(self):
        return float(np.min(self.field.values))

    @property
    def center_value(self):
        return center_value(self.field)

    def bundle(self):
        return curvature_bundle(self.field, self.config.k, boundary_value=self.config.c)

    def summary(self):
        return {"residual_max": self.residual_max, "iterations": self.iterations,
                "history": list(self.history), "angle": self.angle.to_json(),
                "gamma_margin": self.gamma_margin, "spacelike_margin": self.spacelike_margin,
                "u_min": self.u_min, "u_center": self.center_value,
                "initial_guess": self.initial_guess, "converged": self.converged,
                "k": self.config.k, "hk": self.config.hk, "c": self.config.c}


def center_value(field):
    """u at the domain centre from the angular means of the two inner rings.

    The angular mean of a smooth function is even in s, so
    ``mean(s) = u(0) + b s^2 + O(s^4)``.
    """
    s0, s1 = field.grid.s[0], field.grid.s[1]
    m0 = float(np.mean(field.values[0]))
    m1 = float(np.mean(field.values[1]))
    return (s1 ** 2 * m0 - s0 ** 2 * m1) / (s1 ** 2 - s0 ** 2)


def angle_stats(field, c, k=1):
    """Statistics of theta = <N, E_3> on the boundary, extrapolated to s = 1."""
    bundle = curvature_bundle(field, k, boundary_value=c)
    theta = boundary_trace(bundle.theta, field.grid)
    mean = float(np.mean(theta))
    lo, hi = float(np.min(theta)), float(np.max(theta))
    return AngleStats(mean=mean, min=lo, max=hi, spread=(hi - lo) / abs(mean))


def boundary_angle_stats(result):
    """Boundary-angle statistics of a converged solve."""
    if not result.converged:
        raise ValueError("angle statistics need a converged result")
    return angle_stats(result.field, result.config.c, result.config.k)


# ----------------------------------------------------------------------------
# pointwise nonlinearity

def _sigma_k_pointwise(p, r, k):
    """sigma_k(A) from gradient p (..., 2) and Hessian r (..., 2, 2).

    k = 1: tr(g^-1 D^2u) / W; k = 2: det(D^2u) / (1 - |Du|^2)^2.
    """
    W2 = 1.0 - np.sum(p * p, axis=-1)
    if k == 1:
        quad = np.einsum("...a,...ab,...b->...", p, r, p)
        return (r[..., 0, 0] + r[..., 1, 1] + quad / W2) / np.sqrt(W2)
    det = r[..., 0, 0] * r[..., 1, 1] - r[..., 0, 1] * r[..., 1, 0]
    return det / W2 ** 2


def shape_operator(p, r):
    """A = g^-1 D^2u / W from gradient and Hessian arrays."""
    W2 = 1.0 - np.sum(p * p, axis=-1)
    ginv = np.eye(2) + p[..., :, None] * p[..., None, :] / W2[..., None, None]
    return ginv @ r / np.sqrt(W2)[..., None, None]


def sigma_k_generic(p, r, k):
    """The same quantity through symfunc on the assembled shape operator."""
    return symfunc.sigma(k, shape_operator(p, r))


def _pointwise_partials(p, r, k, rel=1e-6):
    """Central-difference partials of sigma_k with respect to p_a and the symmetric Hessian.

    Returns ``fp`` (..., 2) and ``fr`` (..., 2, 2) with ``fr`` symmetric and
    ``d sigma = fp . dp + sum fr * dr`` for symmetric ``dr``.
    """
    fp = np.empty(p.shape)
    for a in range(2):
        step = rel * np.maximum(1.0, np.abs(p[..., a]))
        e = np.zeros(p.shape)
        e[..., a] = step
        fp[..., a] = (_sigma_k_pointwise(p + e, r, k) - _sigma_k_pointwise(p - e, r, k)) / (2 * step)
    fr = np.empty(r.shape)
    for a, b in ((0, 0), (1, 1), (0, 1)):
        step = rel * np.maximum(1.0, np.abs(r[..., a, b]))
        e = np.zeros(r.shape)
        e[..., a, b] = step
        e[..., b, a] = step
        d = (_sigma_k_pointwise(p, r + e, k) - _sigma_k_pointwise(p, r - e, k)) / (2 * step)
        if a == b:
            fr[..., a, a] = d
        else:
            fr[..., 0, 1] = fr[..., 1, 0] = 0.5 * d
    return fp, fr


def mean_curvature_partials(p, r):
    """Exact partials of sigma_1 (the quasilinear k = 1 operator)."""
    W2 = 1.0 - np.sum(p * p, axis=-1)
    W = np.sqrt(W2)
    rp = np.einsum("...ab,...b->...a", r, p)
    quad = np.einsum("...a,...a->...", p, rp)
    trace = r[..., 0, 0] + r[..., 1, 1] + quad / W2
    fp = ((2 * rp / W2[..., None] + 2 * p * (quad / W2 ** 2)[..., None]) / W[..., None]
          + p * (trace / W ** 3)[..., None])
    ginv = np.eye(2) + p[..., :, None] * p[..., None, :] / W2[..., None, None]
    return fp, ginv / W[..., None, None]


# ----------------------------------------------------------------------------
# Jacobian assembly (block tridiagonal in the rings)

class _LinearOperators:
    """Coefficients of the linear derivative maps used by the solver.

    With the three-point ray stencils, the radial derivatives of ring i < nr-1
    involve rings i-1, i, i+1 (and the across-centre partner within ring 0).
    The last ring uses the one-sided boundary closure over the rings
    nr-1-q, q < TAIL, with weights T1[q], T2[q].  Angular derivatives are
    dense circulants.
    """

    def __init__(self, grid):
        self.grid = grid
        nr, nphi, h = grid.nr, grid.nphi, grid.ds
        R1 = np.zeros((nr, 3, nphi))
        R2 = np.zeros((nr, 3, nphi))
        R1[1:-1, 0], R1[1:-1, 2] = -1 / (2 * h), 1 / (2 * h)
        R2[1:-1, 0], R2[1:-1, 1], R2[1:-1, 2] = 1 / h ** 2, -2 / h ** 2, 1 / h ** 2
        partner, ratio = grid._center_coupling
        hl = grid.s[0] * (1.0 + ratio)
        hr = h
        self.partner = partner
        self.P1 = -hr / (hl * (hl + hr))
        R1[0, 1] = (hr - hl) / (hl * hr)
        R1[0, 2] = hl / (hr * (hl + hr))
        self.P2 = 2 / (hl * (hl + hr))
        R2[0, 1] = -2 / (hl * hr)
        R2[0, 2] = 2 / (hr * (hl + hr))
        self.T1 = np.zeros(TAIL)
        self.T2 = np.zeros(TAIL)
        self.T1[: len(_D1_OUTER_BV) - 1] = _D1_OUTER_BV[1:] / h
        self.T2[: len(_D2_OUTER_BV) - 1] = _D2_OUTER_BV[1:] / h ** 2
        self.R1, self.R2 = R1, R2
        eye = np.eye(nphi)
        dp, dpp = _angular_derivatives(eye, nphi)
        self.Dp, self.Dpp = dp.T.copy(), dpp.T.copy()


def _chain_coefficients(grid, fp, fr):
    """Coefficients of dF in terms of (us, up, uss, usp, upp)."""
    jinv, x_sp, x_pp = grid._metrics
    # fQ = J fr J^T with J = jinv (J[b, a] = d xi_b / d x_a)
    fQ = np.einsum("...ba,...ac,...dc->...bd", jinv, fr, jinv)
    gp = fp - 2 * fQ[..., 0, 1, None] * x_sp - fQ[..., 1, 1, None] * x_pp
    cs = gp[..., 0] * jinv[..., 0, 0] + gp[..., 1] * jinv[..., 0, 1]
    cp = gp[..., 0] * jinv[..., 1, 0] + gp[..., 1] * jinv[..., 1, 1]
    return cs, cp, fQ[..., 0, 0], 2 * fQ[..., 0, 1], fQ[..., 1, 1]


def assemble_jacobian(ops, fp, fr):
    """Jacobian from pointwise partials as ``(J, tail)``.

    ``J[i, o]`` (shape (nr, 3, nphi, nphi)) couples ring i < nr-1 to ring
    i-1+o; ``tail[q]`` couples the last ring to ring nr-1-q.
    """
    grid = ops.grid
    nr, nphi = grid.shape
    cs, cp, css, csp, cpp = _chain_coefficients(grid, fp, fr)
    J = np.zeros((nr, 3, nphi, nphi))
    idx = np.arange(nphi)
    for o in range(3):
        # usp = Dp us: row j of Dp scaled by csp, columns by the radial weight
        J[:, o] = csp[:, :, None] * ops.Dp[None] * ops.R1[:, o, None, :]
        J[:, o, idx, idx] += cs * ops.R1[:, o] + css * ops.R2[:, o]
    J[:, 1] += cp[:, :, None] * ops.Dp[None] + cpp[:, :, None] * ops.Dpp[None]
    # ring 0: across-centre partner enters us and uss of the same ring
    part = ops.partner
    J[0, 1, idx, part] += cs[0] * ops.P1 + css[0] * ops.P2
    J[0, 1][:, part] += csp[0][:, None] * ops.Dp * ops.P1[None, :]
    J[0, 0] = 0.0
    J[-1] = 0.0
    tail = np.zeros((TAIL, nphi, nphi))
    for q in range(TAIL):
        tail[q] = csp[-1][:, None] * ops.Dp * ops.T1[q]
        tail[q, idx, idx] += cs[-1] * ops.T1[q] + css[-1] * ops.T2[q]
    tail[0] += cp[-1][:, None] * ops.Dp + cpp[-1][:, None] * ops.Dpp
    return J, tail


def block_tridiagonal_solve(J, rhs, tail=None):
    """Solve the ring-coupled system (block Thomas algorithm).

    ``J[i, 0]``, ``J[i, 1]``, ``J[i, 2]`` couple ring i to rings i-1, i, i+1.
    When ``tail`` is given it replaces the last block row: ``tail[q]``
    couples the last ring to ring nr-1-q.  The rings it reaches are written
    as affine functions of the last ring, ``x_j = a_j - M_j x_last``, by
    back substitution through the eliminated rows.
    """
    nr = J.shape[0]
    last = nr - 1 if tail is not None else nr
    y = np.empty_like(rhs)
    C = [None] * nr
    for i in range(last):
        B = J[i, 1].copy()
        b = rhs[i].copy()
        if i > 0:
            B -= J[i, 0] @ C[i - 1]
            b -= J[i, 0] @ y[i - 1]
        lu = scipy.linalg.lu_factor(B, check_finite=False)
        if i < nr - 1:
            C[i] = scipy.linalg.lu_solve(lu, J[i, 2], check_finite=False)
        y[i] = scipy.linalg.lu_solve(lu, b, check_finite=False)
    x = np.empty_like(rhs)
    if tail is None:
        x[-1] = y[-1]
    else:
        B = tail[0].copy()
        b = rhs[-1].copy()
        a, M = y[nr - 2], C[nr - 2]
        for q in range(1, min(len(tail), nr)):
            j = nr - 1 - q
            if q > 1:
                a, M = y[j] - C[j] @ a, -C[j] @ M
            B -= tail[q] @ M
            b -= tail[q] @ a
        x[-1] = scipy.linalg.solve(B, b, check_finite=False)
    for i in range(nr - 2, -1, -1):
        x[i] = y[i] - C[i] @ x[i + 1]
    return x


# ----------------------------------------------------------------------------
# grid solver

class _Problem:
    """Residual and derivatives for the correction v = u - u_init.

    The correction is carried as ring means ``m`` plus deviations ``d`` with
    zero ring mean; angular derivatives never see ``m``, and near the centre
    ``d`` is O(s^2), so rounding of the stored values is not amplified by
    the 1 / s^2 metric factors.
    """

    def __init__(self, config, grid, u_init):
        self.config = config
        self.grid = grid
        self.u_init = u_init
        self.p0, self.r0 = derivatives(u_init, grid, config.c, center_correction=False)
        self.ops = _LinearOperators(grid)

    @staticmethod
    def split(v):
        m = np.mean(v, axis=-1)
        return m, v - m[..., None]

    def derivs(self, m, d):
        ring = np.broadcast_to(m[..., None], m.shape + (self.grid.nphi,))
        pm, rm = derivatives(ring, self.grid, 0.0, center_correction=False)
        pd, rd = derivatives(d, self.grid, 0.0, center_correction=False)
        return self.p0 + pm + pd, self.r0 + rm + rd

    def residual(self, m, d):
        p, r = self.derivs(m, d)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = _sigma_k_pointwise(p, r, self.config.k) - self.config.target
        return F, p, r

    def admissible(self, p, r):
        """(spacelike margin, Gamma_k margin) of a trial state."""
        grad = np.sqrt(np.max(np.sum(p * p, axis=-1)))
        spacelike = 1.0 - self.config.eps - grad
        if not spacelike >= 0:
            return spacelike, -math.inf
        sig = symfunc.sigmas(shape_operator(p, r))
        return spacelike, float(np.min(sig[..., 1 : self.config.k + 1]))

    def jacobian(self, m, d, p, r):
        if self.config.jacobian == "colored":
            return colored_jacobian(self, m, d)
        fp, fr = _pointwise_partials(p, r, self.config.k)
        return assemble_jacobian(self.ops, fp, fr)


def colored_jacobian(problem, m, d, step=1e-7, chunk=64):
    """Reference Jacobian by forward differences of F along colored directions.

    A node of ring i influences residuals of rings i-1..i+1 at every angle
    (the angular derivatives are global on a ring), and nodes of the rings
    nr-TAIL..nr-1 also reach the last ring through the boundary closure.  The
    color of node (i, j) is therefore (i mod TAIL, j): TAIL * nphi evaluations
    of F.  Returns ``(J, tail)`` like :func:`assemble_jacobian`.
    """
    grid = problem.grid
    nr, nphi = grid.shape
    F0, _, _ = problem.residual(m, d)
    J = np.zeros((nr, 3, nphi, nphi))
    tail = np.zeros((TAIL, nphi, nphi))
    colors = [(q, j) for q in range(TAIL) for j in range(nphi)]
    for start in range(0, len(colors), chunk):
        batch = colors[start:start + chunk]
        E = np.zeros((len(batch), nr, nphi))
        for b, (q, j) in enumerate(batch):
            E[b, q::TAIL, j] = step
        Fb, _, _ = problem.residual(np.broadcast_to(m, (len(batch),) + m.shape), d[None] + E)
        dF = (Fb - F0[None]) / step
        for b, (q, j) in enumerate(batch):
            for ip in range(q, nr, TAIL):
                for i in (ip - 1, ip, ip + 1):
                    if 0 <= i < nr - 1:
                        J[i, ip - i + 1, :, j] = dF[b, i]
                if nr - 1 - ip < TAIL:
                    tail[nr - 1 - ip, :, j] = dF[b, nr - 1]
    return J, tail


def _initial_guesses(config, grid):
    """Candidate initial iterates, in order of preference.

    First the cap fitted to the inradius (exact on disks), then paraboloids
    ``c - delta (1 - s^2)`` that vanish on the boundary; ``s^2`` is a
    quadratic form for ellipses, so there they are smooth and convex.
    """
    star = grid.star
    kappa = config.hk ** (1.0 / config.k)
    R0 = star.inradius
    r = np.linalg.norm(grid.x - np.asarray(star.center), axis=-1)
    cap = radial_closed_form(r, 2, config.k, config.hk, R0, config.c)
    depth = config.c - float(radial_closed_form(0.0, 2, config.k, config.hk, R0, config.c))
    yield "inradius_cap", cap
    bowl = np.broadcast_to(1.0 - (grid.s ** 2)[:, None], grid.shape)
    yield "paraboloid", config.c - depth * bowl
    yield "shallow_paraboloid", config.c - 0.1 * R0 * bowl


def solve_dirichlet(config):
    """Damped Newton solve of sigma_k(A[u]) = C(2, k) H_k with u = c on the boundary."""
    if not isinstance(config, SolverConfig):
        raise TypeError("solve_dirichlet expects a SolverConfig")
    t0 = time.perf_counter()
    grid = build_grid(config.domain, config.nr, config.nphi)
    chosen = None
    tried = []
    for name, guess in _initial_guesses(config, grid):
        problem = _Problem(config, grid, guess)
        m, d = np.zeros(grid.nr), np.zeros(grid.shape)
        F, p, r = problem.residual(m, d)
        spacelike, cone = problem.admissible(p, r)
        tried.append((name, spacelike, cone))
        if spacelike >= 0 and (cone > 0 or not config.cone_guard):
            chosen = name
            break
    if chosen is None:
        raise ConePreconditionError(
            "no initial guess is spacelike and k-convex: "
            + ", ".join(f"{n} (spacelike margin {s:.3g}, cone margin {c:.3g})" for n, s, c in tried))

    history = [float(np.max(np.abs(F)))]
    iterations = 0
    while history[-1] > config.tol:
        if iterations >= config.max_iter:
            raise NonConvergenceError(
                f"Newton reached max_iter = {config.max_iter} with residual {history[-1]:.3e}",
                history, {"initial_guess": chosen, "grid": grid.describe()})
        J, tail = problem.jacobian(m, d, p, r)
        dm, dd = problem.split(-block_tridiagonal_solve(J, F, tail))
        merit = float(np.linalg.norm(F))
        alpha = 1.0
        while True:
            mt, dt = m + alpha * dm, d + alpha * dd
            Ft, pt, rt = problem.residual(mt, dt)
            spacelike, cone = problem.admissible(pt, rt)
            ok = spacelike >= 0 and (cone > 0 or not config.cone_guard)
            if ok and np.linalg.norm(Ft) <= (1.0 - 1e-4 * alpha) * merit:
                break
            alpha *= 0.5
            if alpha < config.min_step:
                raise NonConvergenceError(
                    f"line search stagnated at residual {history[-1]:.3e}",
                    history, {"initial_guess": chosen, "grid": grid.describe(),
                              "iterations": iterations})
        m, d, F, p, r = mt, dt, Ft, pt, rt
        iterations += 1
        history.append(float(np.max(np.abs(F))))

    u = ScalarField(grid, problem.u_init + m[:, None] + d)
    spacelike, cone = problem.admissible(p, r)
    result = SolveResult(field=u, residual_max=history[-1], iterations=iterations, history=history,
                         angle=angle_stats(u, config.c, config.k), gamma_margin=cone,
                         spacelike_margin=spacelike, config=config, initial_guess=chosen,
                         seconds=time.perf_counter() - t0, converged=True)
    return result


# ----------------------------------------------------------------------------
# rigidity experiments

def ellipse_family(aspects, modes=32):
    """Ellipses with semi-axes (1, 1 / aspect), one per aspect ratio."""
    return [StarDomain2D.ellipse(1.0, 1.0 / a, modes=modes) for a in aspects]


def asymmetry(domain):
    """max rho / min rho of a star domain (1 for a disk)."""
    star = domain.as_star() if isinstance(domain, BallDomain) else domain
    phi = 2.0 * np.pi * np.arange(4096) / 4096
    rho = star.rho(phi)
    return float(np.max(rho) / np.min(rho))


@dataclass
class ScanRow:
    asymmetry: float
    spread: float
    theta_mean: float
    u_min: float
    iterations: int
    converged: bool
    message: str = ""

    def as_tuple(self):
        return (self.asymmetry, self.spread, self.theta_mean, self.u_min, self.iterations,
                self.converged)


@dataclass
class ScanResult:
    rows: list
    monotone: bool

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for row in self.rows:
            writer.writerow([repr(float(row.asymmetry)), repr(float(row.spread)),
                             repr(float(row.theta_mean)), repr(float(row.u_min)),
                             row.iterations, "true" if row.converged else "false"])
        return buf.getvalue()

    def write_csv(self, path):
        Path(path).write_text(self.to_csv())


def rigidity_scan(domains, k=1, hk=1.0, c=0.0, nr=64, nphi=128, asymmetries=None, **options):
    """One solve per domain; rows keep their input order.

    ``asymmetries`` labels the rows (default: max rho / min rho).  A solve
    that fails is recorded with ``converged = False`` and NaN statistics.
    ``monotone`` is true when the spread does not decrease with the
    asymmetry label among converged rows.
    """
    domains = list(domains)
    labels = list(asymmetries) if asymmetries is not None else [asymmetry(d) for d in domains]
    if len(labels) != len(domains):
        raise ValueError("one asymmetry label per domain is required")
    rows = []
    for label, dom in zip(labels, domains):
        config = SolverConfig(k=k, hk=hk, domain=dom, c=c, nr=nr, nphi=nphi, **options)
        try:
            res = solve_dirichlet(config)
            rows.append(ScanRow(float(label), res.angle.spread, res.angle.mean, res.u_min,
                                res.iterations, True))
        except (NonConvergenceError, ConePreconditionError) as exc:
            its = len(getattr(exc, "history", [])) - 1
            rows.append(ScanRow(float(label), math.nan, math.nan, math.nan, max(its, 0), False,
                                str(exc)))
    good = sorted((r for r in rows if r.converged), key=lambda r: r.asymmetry)
    monotone = all(b.spread >= a.spread for a, b in zip(good, good[1:]))
    return ScanResult(rows=rows, monotone=monotone)
