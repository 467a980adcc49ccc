"""The hyperboloid cap, the umbilic solution with all principal curvatures 1.

Over the ball B_R(a) with R = sqrt(theta0^2 - 1) the cap is the graph

    u(x) = c + theta0 + sqrt(1 + |x - a|^2),

which meets the plane x_{n+1} = c along the sphere |x - a| = R at the
constant angle <N, E_{n+1}> = theta0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import BallDomain, ScalarField, build_grid
from .exceptions import DomainInvalidError, InvalidAngleError

__all__ = ["HyperboloidCap", "CapGeometry", "cap_from_angle", "cap_from_radius",
           "analytic_bundle", "sample_to_grid", "cap_grid"]


@dataclass(frozen=True)
class HyperboloidCap:
    n: int
    c: float
    theta0: float
    a: tuple

    @property
    def R(self):
        return math.sqrt(self.theta0 ** 2 - 1.0)

    @property
    def degenerate(self):
        return self.R == 0.0

    @property
    def domain(self):
        return BallDomain(self.n, self.a, self.R)

    def u(self, x):
        """Height of the cap at points ``x`` of shape (..., n)."""
        r2 = np.sum((np.asarray(x, dtype=float) - np.asarray(self.a)) ** 2, axis=-1)
        return self.c + self.theta0 + np.sqrt(1.0 + r2)

    @property
    def apex(self):
        """u(a) - c = theta0 + 1 (negative unless degenerate)."""
        return self.c + self.theta0 + 1.0

    def to_json(self):
        return {"n": self.n, "c": self.c, "theta0": self.theta0, "a": list(self.a), "R": self.R}


def cap_from_angle(n, c, theta0, a=None):
    """Cap with intersection angle ``theta0 <= -1`` over B_R(a), R = sqrt(theta0^2 - 1)."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    theta0 = float(theta0)
    if not math.isfinite(theta0) or theta0 > -1.0:
        raise InvalidAngleError(
            f"theta0 = {theta0} is not admissible: <N, E_(n+1)> <= -1 for timelike unit normals")
    a = (0.0,) * n if a is None else tuple(float(v) for v in a)
    if len(a) != n:
        raise ValueError(f"center must have {n} components")
    return HyperboloidCap(n=n, c=float(c), theta0=theta0, a=a)


def cap_from_radius(n, c, R, a=None):
    """Cap over a ball of radius ``R``; the angle is theta0 = -sqrt(1 + R^2)."""
    if not R >= 0:
        raise ValueError(f"radius must be non-negative, got {R}")
    return cap_from_angle(n, c, -math.sqrt(1.0 + R * R), a)


@dataclass
class CapGeometry:
    """Closed-form pointwise geometry of a cap at a set of points."""

    x: np.ndarray
    u: np.ndarray
    Du: np.ndarray
    N: np.ndarray
    A: np.ndarray
    lam: np.ndarray
    Hk: np.ndarray
    theta: np.ndarray
    P: np.ndarray


def analytic_bundle(cap, points):
    """Exact geometry of ``cap`` at ``points`` (shape (m, n)) in the closed ball."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[-1] != cap.n:
        raise ValueError(f"points must have {cap.n} coordinates")
    d = x - np.asarray(cap.a)
    r2 = np.sum(d * d, axis=-1)
    if np.any(np.sqrt(r2) > cap.R * (1 + 1e-12) + 1e-12):
        worst = int(np.argmax(r2))
        raise DomainInvalidError(
            f"point {x[worst].tolist()} lies outside the closed ball of radius {cap.R}")
    w = np.sqrt(1.0 + r2)
    Du = d / w[:, None]
    # (Du, 1) / sqrt(1 - |Du|^2) with sqrt(1 - |Du|^2) = 1 / w
    N = np.concatenate([Du, np.ones((len(x), 1))], axis=1) * w[:, None]
    m = len(x)
    A = np.broadcast_to(np.eye(cap.n), (m, cap.n, cap.n)).copy()
    lam = np.ones((m, cap.n))
    Hk = np.ones((m, cap.n))
    theta = -w
    P = np.full(m, -cap.c - cap.theta0)
    return CapGeometry(x=x, u=cap.u(x), Du=Du, N=N, A=A, lam=lam, Hk=Hk, theta=theta, P=P)


def sample_to_grid(cap, grid):
    """Nodal values of the cap on a grid covering B_R(a) (n = 2 only)."""
    if cap.n != 2:
        raise ValueError("grids exist only for n = 2")
    star = grid.star
    if not star.is_disk or abs(star.a0 - cap.R) > 1e-12 or \
            np.max(np.abs(np.subtract(star.center, cap.a))) > 1e-12:
        raise DomainInvalidError("grid domain does not match the cap's ball B_R(a)")
    return ScalarField(grid, cap.u(grid.x))


def cap_grid(cap, nr, nphi):
    """Convenience: grid over the cap's ball and the sampled cap on it."""
    grid = build_grid(cap.domain, nr, nphi)
    return sample_to_grid(cap, grid)
