"""Polar-mapped grids over star-shaped planar domains.

A domain is described by its center and a positive, 2*pi-periodic boundary
radius ``rho(phi)`` given by a truncated Fourier series.  The grid maps the
computational rectangle ``(s, phi) in (0, 1) x [0, 2*pi)`` onto the domain by

    x(s, phi) = center + s * rho(phi) * (cos(phi), sin(phi)),

with cell-centred radial nodes ``s_i = (i + 1/2) / nr`` (no node sits at the
centre) and equispaced angles ``phi_j = 2*pi*j / nphi``.

Radial derivatives use second-order central differences.  The innermost ring
borrows its inner neighbour from across the centre (node ``j + nphi/2``), and
the outermost ring uses one-sided closures whose leading truncation error is
matched to the interior stencil, so that the discretization error is a smooth
field and can itself be differentiated without losing an order.  Angular
derivatives are taken with the FFT; they are exact for the trigonometric
polynomials produced by polynomial data on Fourier domains.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial
from pathlib import Path

import numpy as np

from .exceptions import DomainInvalidError, GridMismatchError, SchemaError

__all__ = [
    "StarDomain2D",
    "BallDomain",
    "Grid",
    "ScalarField",
    "build_grid",
    "differentiate",
    "integrate",
    "read_field",
    "write_field",
    "fit_fourier",
]

FIELD_VERSION = 1
_POSITIVITY_SAMPLES = 4096


def fit_fourier(func, modes, samples=None):
    """Fourier coefficients ``(a0, cos, sin)`` of a 2*pi-periodic function.

    ``func`` is sampled at ``samples`` equispaced angles (default
    ``max(256, 8 * modes)``) and the series is truncated after ``modes``
    harmonics.
    """
    if samples is None:
        samples = max(256, 8 * modes)
    phi = 2.0 * np.pi * np.arange(samples) / samples
    coef = np.fft.rfft(np.asarray(func(phi), dtype=float)) / samples
    a0 = float(coef[0].real)
    cos = tuple(float(2.0 * c.real) for c in coef[1 : modes + 1])
    sin = tuple(float(-2.0 * c.imag) for c in coef[1 : modes + 1])
    return a0, cos, sin


@dataclass(frozen=True)
class StarDomain2D:
    """Planar domain star-shaped about ``center`` with boundary radius rho(phi)."""

    center: tuple = (0.0, 0.0)
    a0: float = 1.0
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "a0", float(self.a0))
        cos = tuple(float(c) for c in self.cos)
        sin = tuple(float(c) for c in self.sin)
        m = max(len(cos), len(sin))
        cos = cos + (0.0,) * (m - len(cos))
        sin = sin + (0.0,) * (m - len(sin))
        object.__setattr__(self, "cos", cos)
        object.__setattr__(self, "sin", sin)
        if len(self.center) != 2:
            raise DomainInvalidError("center must be a point in R^2")
        coeffs = (self.a0,) + cos + sin
        if not all(math.isfinite(c) for c in coeffs):
            raise DomainInvalidError("Fourier coefficients must be finite")
        phi = 2.0 * np.pi * np.arange(_POSITIVITY_SAMPLES) / _POSITIVITY_SAMPLES
        rmin = float(np.min(self.rho(phi)))
        if not rmin > 0.0:
            raise DomainInvalidError(
                f"boundary radius must be positive, found min rho = {rmin:.6g}")

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0)):
        return cls(center=center, a0=radius)

    @classmethod
    def ellipse(cls, a=1.0, b=1.0, center=(0.0, 0.0), modes=32):
        """Ellipse with semi-axes ``a`` (along x1) and ``b`` (along x2)."""
        if not (a > 0 and b > 0):
            raise DomainInvalidError("ellipse semi-axes must be positive")
        a0, cos, sin = fit_fourier(lambda p: ellipse_radius(p, a, b), modes)
        return cls(center=center, a0=a0, cos=cos, sin=sin)

    @property
    def modes(self):
        return len(self.cos)

    def _harmonics(self, phi):
        phi = np.asarray(phi, dtype=float)
        m = np.arange(1, self.modes + 1)
        ang = np.multiply.outer(phi, m)
        return m, np.cos(ang), np.sin(ang)

    def rho(self, phi):
        m, c, s = self._harmonics(phi)
        if not m.size:
            return np.full(np.shape(phi), self.a0)
        return self.a0 + c @ np.asarray(self.cos) + s @ np.asarray(self.sin)

    def drho(self, phi):
        m, c, s = self._harmonics(phi)
        if not m.size:
            return np.zeros(np.shape(phi))
        return s @ (-m * np.asarray(self.cos)) + c @ (m * np.asarray(self.sin))

    def d2rho(self, phi):
        m, c, s = self._harmonics(phi)
        if not m.size:
            return np.zeros(np.shape(phi))
        m2 = m * m
        return -(c @ (m2 * np.asarray(self.cos)) + s @ (m2 * np.asarray(self.sin)))

    @property
    def inradius(self):
        """Minimum distance from the centre to the boundary."""
        phi = 2.0 * np.pi * np.arange(_POSITIVITY_SAMPLES) / _POSITIVITY_SAMPLES
        return float(np.min(self.rho(phi)))

    @property
    def is_disk(self):
        return not any(self.cos) and not any(self.sin)

    def to_json(self):
        return {"type": "star", "center": list(self.center),
                "rho": {"a0": self.a0, "cos": list(self.cos), "sin": list(self.sin)}}


def ellipse_radius(phi, a, b):
    """Closed-form boundary radius of the ellipse x1^2/a^2 + x2^2/b^2 = 1."""
    phi = np.asarray(phi, dtype=float)
    return a * b / np.sqrt((b * np.cos(phi)) ** 2 + (a * np.sin(phi)) ** 2)


@dataclass(frozen=True)
class BallDomain:
    """Euclidean ball B_R(a) in R^n."""

    n: int = 2
    center: tuple = None
    radius: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainInvalidError("ball dimension must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        center = (0.0,) * self.n if self.center is None else tuple(float(c) for c in self.center)
        if len(center) != self.n:
            raise DomainInvalidError(f"center must have {self.n} components")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainInvalidError(f"ball radius must be positive, got {self.radius}")

    def as_star(self):
        if self.n != 2:
            raise DomainInvalidError("only two-dimensional balls can carry a grid")
        return StarDomain2D.disk(self.radius, self.center)

    @property
    def inradius(self):
        return self.radius

    def to_json(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


def _as_star(domain):
    if isinstance(domain, BallDomain):
        return domain.as_star()
    if isinstance(domain, StarDomain2D):
        return domain
    raise DomainInvalidError(f"unsupported domain type {type(domain).__name__}")


def _stencil(offsets, targets):
    """Weights w with sum_m w_m t_m^p / p! = targets[p] for p = 0..len-1."""
    t = np.asarray(offsets, dtype=float)
    p = np.arange(len(t))
    V = t[None, :] ** p[:, None] / np.array([factorial(q) for q in p])[:, None]
    return np.linalg.solve(V, np.asarray(targets, dtype=float))


# One-sided closures at the outer ring (offsets 0, -1, -2, ...).  Their
# truncation error agrees with the interior central stencils through O(h^3):
#   D1 u = u' + h^2 u'''/6 + O(h^4),   D2 u = u'' + h^2 u''''/12 + O(h^4),
# so the error field has no jump at the boundary for a later derivative to
# amplify.  The short variants serve grids with nr < 6.
_D1_OUTER = _stencil([0, -1, -2, -3, -4], [0, 1, 0, 1 / 6, 0])
_D2_OUTER = _stencil([0, -1, -2, -3, -4, -5], [0, 0, 1, 0, 1 / 12, 0])
_D1_OUTER_SHORT = _stencil([0, -1, -2, -3], [0, 1, 0, 1 / 6])
_D2_OUTER_SHORT = _stencil([0, -1, -2, -3], [0, 0, 1, 0])
# The same closures when the boundary value u(1) = c is known (offset +1/2).
_D1_OUTER_BV = _stencil([0.5, 0, -1, -2, -3], [0, 1, 0, 1 / 6, 0])
_D2_OUTER_BV = _stencil([0.5, 0, -1, -2, -3, -4], [0, 0, 1, 0, 1 / 12, 0])
# Ghost value at s = 1 + h/2 from u(1 - 3h/2), u(1 - h/2) and u(1) = c, for
# grids too coarse for the closures above.
_GHOST = (1.0 / 3.0, -2.0, 8.0 / 3.0)
_BLEND_RADIUS = 0.5


class Grid:
    """Node set and mapping metrics for a star-shaped domain.

    Arrays are indexed ``[i, j]`` with ``i`` the radial ring and ``j`` the
    angle, so row-major order is "i outer, j inner".
    """

    def __init__(self, domain, nr, nphi):
        self.domain = domain
        self.star = _as_star(domain)
        self.nr = int(nr)
        self.nphi = int(nphi)
        self.ds = 1.0 / self.nr
        self.dphi = 2.0 * np.pi / self.nphi
        self.s = (np.arange(self.nr) + 0.5) / self.nr
        self.phi = self.dphi * np.arange(self.nphi)
        self.rho = self.star.rho(self.phi)
        self.drho = self.star.drho(self.phi)
        self.d2rho = self.star.d2rho(self.phi)
        if np.any(self.rho <= 0):
            raise DomainInvalidError("boundary radius is non-positive at a grid angle")

    def __eq__(self, other):
        return isinstance(other, Grid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Grid(nr={self.nr}, nphi={self.nphi}, domain={self.domain!r})"

    @property
    def key(self):
        return (self.star, self.nr, self.nphi)

    @property
    def shape(self):
        return (self.nr, self.nphi)

    @property
    def size(self):
        return self.nr * self.nphi

    @property
    def h(self):
        """Characteristic mesh width (radial step in s)."""
        return self.ds

    def describe(self):
        return {"nr": self.nr, "nphi": self.nphi}

    @cached_property
    def _unit(self):
        e = np.stack([np.cos(self.phi), np.sin(self.phi)], axis=-1)
        ep = np.stack([-np.sin(self.phi), np.cos(self.phi)], axis=-1)
        return e, ep

    @cached_property
    def x(self):
        """Node coordinates, shape (nr, nphi, 2)."""
        e, _ = self._unit
        r = np.multiply.outer(self.s, self.rho)
        return np.asarray(self.star.center) + r[..., None] * e

    @cached_property
    def radius(self):
        """Distance of each node from the domain centre."""
        return np.multiply.outer(self.s, self.rho)

    @cached_property
    def jacobian_det(self):
        """det d(x)/d(s, phi) = s * rho(phi)^2."""
        return np.multiply.outer(self.s, self.rho ** 2)

    @cached_property
    def weights(self):
        """Midpoint quadrature weights s * rho^2 * ds * dphi."""
        return self.jacobian_det * (self.ds * self.dphi)

    @cached_property
    def _metrics(self):
        e, ep = self._unit
        s = self.s[:, None, None]
        rho = self.rho[None, :, None]
        drho = self.drho[None, :, None]
        d2rho = self.d2rho[None, :, None]
        x_s = np.broadcast_to(rho * e, (self.nr, self.nphi, 2))
        x_sp = np.broadcast_to(drho * e + rho * ep, (self.nr, self.nphi, 2))
        x_p = s * x_sp
        x_pp = s * (d2rho * e + 2.0 * drho * ep - rho * e)
        det = self.jacobian_det
        # J[a, b] = d x_a / d xi_b with xi = (s, phi)
        jinv = np.empty((self.nr, self.nphi, 2, 2))
        jinv[..., 0, 0] = x_p[..., 1] / det
        jinv[..., 0, 1] = -x_p[..., 0] / det
        jinv[..., 1, 0] = -x_s[..., 1] / det
        jinv[..., 1, 1] = x_s[..., 0] / det
        return jinv, np.ascontiguousarray(x_sp), x_pp

    @cached_property
    def _center_coupling(self):
        """Across-centre partner index and its scaled position on the ray."""
        partner = (np.arange(self.nphi) + self.nphi // 2) % self.nphi
        ratio = self.rho[partner] / self.rho
        return partner, ratio

    def _ray_index(self, m):
        """Rings and angles of the five-point ray neighbourhood of rings < m.

        Neighbour ``q`` of node ``(i, j)`` is ring ``i + q - 2``; negative
        rings are reflected through the centre onto the partner angle.
        """
        partner, _ = self._center_coupling
        rings = np.empty((m, self.nphi, 5), dtype=int)
        cols = np.empty((m, self.nphi, 5), dtype=int)
        for i in range(m):
            for q in range(5):
                r = i + q - 2
                rings[i, :, q] = r if r >= 0 else -r - 1
                cols[i, :, q] = np.arange(self.nphi) if r >= 0 else partner
        return rings, cols

    def _ray_values(self, u, m):
        rings, cols = self._ray_index(m)
        return u[..., rings, cols]

    @cached_property
    def _center_stencils(self):
        blend = _center_blend(self.s)
        m = int(np.count_nonzero(blend))
        _, ratio = self._center_coupling
        t = np.empty((m, self.nphi, 5))
        for i in range(m):
            for q in range(5):
                r = i + q - 2
                t[i, :, q] = (self.s[r] if r >= 0 else -self.s[-r - 1] * ratio) - self.s[i]
        p = np.arange(5)
        scale = np.array([factorial(q) for q in p], dtype=float)
        V = t[..., None, :] ** p[:, None] / scale[:, None]
        rhs = np.zeros((m, self.nphi, 5, 2))
        rhs[..., 1, 0] = 1.0
        rhs[..., 2, 1] = 1.0
        w = np.linalg.solve(V, rhs)
        return blend[:m], w[..., 0], w[..., 1]

    @cached_property
    def boundary_points(self):
        """Boundary points x(1, phi_j), shape (nphi, 2)."""
        e, _ = self._unit
        return np.asarray(self.star.center) + self.rho[:, None] * e


def build_grid(domain, nr, nphi):
    """Build the polar-mapped grid over ``domain`` (a StarDomain2D or 2-D ball)."""
    if int(nr) != nr or int(nphi) != nphi:
        raise ValueError("grid counts must be integers")
    if nr < 4:
        raise ValueError(f"nr must be >= 4, got {nr}")
    if nphi < 8 or nphi % 2:
        raise ValueError(f"nphi must be even and >= 8, got {nphi}")
    return Grid(domain, nr, nphi)


@dataclass(eq=False)
class ScalarField:
    """Real values on the nodes of a grid (array shape ``grid.shape``)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(
                f"value count {v.size} does not match node count {self.grid.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(x1, x2)`` at the grid nodes."""
        x = grid.x
        return cls(grid, np.broadcast_to(func(x[..., 0], x[..., 1]), grid.shape))

    def with_values(self, values):
        return ScalarField(self.grid, values)


def _center_blend(s):
    """Smooth weight: 1 at the centre, 0 for s >= 1/2, C^3 at the cut."""
    return np.where(s < _BLEND_RADIUS, (1.0 - (s / _BLEND_RADIUS) ** 2) ** 4, 0.0)


def _radial_derivatives(u, grid, boundary_value=None, center_correction=True):
    """Radial derivatives of ``u`` with shape (..., nr, nphi)."""
    nr, h = grid.nr, grid.ds
    # the stencils annihilate constants; removing one keeps rounding
    # proportional to the variation of u
    ref = u[..., :1, :1]
    u = u - ref
    if boundary_value is not None:
        boundary_value = boundary_value - ref[..., 0, :]
    us = np.empty_like(u)
    uss = np.empty_like(u)

    # interior rings
    us[..., 1:-1, :] = (u[..., 2:, :] - u[..., :-2, :]) / (2 * h)
    uss[..., 1:-1, :] = (u[..., 2:, :] - 2 * u[..., 1:-1, :] + u[..., :-2, :]) / h ** 2

    # innermost ring: inner neighbour is the across-centre node on the same
    # line, at s = -s_0 * rho(phi + pi) / rho(phi)
    partner, ratio = grid._center_coupling
    s0 = grid.s[0]
    hl = s0 * (1.0 + ratio)
    hr = h
    uL, u0, uR = u[..., 0, partner], u[..., 0, :], u[..., 1, :]
    us[..., 0, :] = (-hr / (hl * (hl + hr)) * uL + (hr - hl) / (hl * hr) * u0
                     + hl / (hr * (hl + hr)) * uR)
    uss[..., 0, :] = 2 * (uL / (hl * (hl + hr)) - u0 / (hl * hr) + uR / (hr * (hl + hr)))

    # outermost ring
    if boundary_value is None:
        w1 = _D1_OUTER if nr >= 5 else _D1_OUTER_SHORT
        w2 = _D2_OUTER if nr >= 6 else _D2_OUTER_SHORT
        us[..., -1, :] = sum(w * u[..., nr - 1 - m, :] for m, w in enumerate(w1)) / h
        uss[..., -1, :] = sum(w * u[..., nr - 1 - m, :] for m, w in enumerate(w2)) / h ** 2
    elif nr < 5:
        g = (_GHOST[0] * u[..., -2, :] + _GHOST[1] * u[..., -1, :]
             + _GHOST[2] * boundary_value)
        us[..., -1, :] = (g - u[..., -2, :]) / (2 * h)
        uss[..., -1, :] = (g - 2 * u[..., -1, :] + u[..., -2, :]) / h ** 2
    else:
        us[..., -1, :] = (_D1_OUTER_BV[0] * boundary_value
                          + sum(w * u[..., nr - m, :] for m, w in enumerate(_D1_OUTER_BV) if m)) / h
        uss[..., -1, :] = (_D2_OUTER_BV[0] * boundary_value
                           + sum(w * u[..., nr - m, :] for m, w in enumerate(_D2_OUTER_BV) if m)) / h ** 2

    if center_correction:
        # Along a ray through the centre the three-point error (h^2/6) u_sss
        # depends on the ray direction; the 1/s metric factors would turn it
        # into an O(h) Hessian error.  Fade in five-point stencils there.
        blend, w1, w2 = grid._center_stencils
        m = len(blend)
        ray = grid._ray_values(u, m)
        b = blend[:, None]
        us[..., :m, :] = (1 - b) * us[..., :m, :] + b * np.einsum("ijk,...ijk->...ij", w1, ray)
        uss[..., :m, :] = (1 - b) * uss[..., :m, :] + b * np.einsum("ijk,...ijk->...ij", w2, ray)
    return us, uss


def _angular_derivatives(u, nphi):
    k = np.arange(nphi // 2 + 1, dtype=float)
    # a constant has no angular derivative; removing one keeps FFT rounding
    # proportional to the angular variation rather than to |u|, and makes
    # the derivatives of ring-constant data exactly zero
    uh = np.fft.rfft(u - u[..., :1], axis=-1)
    k1 = 1j * k
    k1[-1] = 0.0  # Nyquist mode has no odd derivative
    up = np.fft.irfft(k1 * uh, n=nphi, axis=-1)
    upp = np.fft.irfft(-(k ** 2) * uh, n=nphi, axis=-1)
    return up, upp


def derivatives(values, grid, boundary_value=None, center_correction=True):
    """Cartesian gradient and Hessian of nodal values (array form).

    ``values`` has shape ``grid.shape``, optionally with leading batch axes.
    With ``boundary_value`` given, the outer ring closure uses
    ``u = boundary_value`` at ``s = 1``.  ``center_correction=False`` keeps
    the plain three-point ray stencils near the centre, so that ring i < nr-1
    couples only to rings i-1..i+1.
    """
    u = np.asarray(values, dtype=float)
    us, uss = _radial_derivatives(u, grid, boundary_value, center_correction)
    up, upp = _angular_derivatives(u, grid.nphi)
    usp, _ = _angular_derivatives(us, grid.nphi)

    jinv, x_sp, x_pp = grid._metrics
    grad = np.empty(u.shape + (2,))
    grad[..., 0] = jinv[..., 0, 0] * us + jinv[..., 1, 0] * up
    grad[..., 1] = jinv[..., 0, 1] * us + jinv[..., 1, 1] * up

    q01 = usp - (grad[..., 0] * x_sp[..., 0] + grad[..., 1] * x_sp[..., 1])
    q11 = upp - (grad[..., 0] * x_pp[..., 0] + grad[..., 1] * x_pp[..., 1])
    Q = np.empty(u.shape + (2, 2))
    Q[..., 0, 0] = uss
    Q[..., 0, 1] = q01
    Q[..., 1, 0] = q01
    Q[..., 1, 1] = q11
    hess = np.einsum("...ba,...bd,...dc->...ac", jinv, Q, jinv)
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return grad, hess


def differentiate(field, boundary_value=None):
    """Return ``(Du, D2u)`` of a ScalarField, shapes (nr, nphi, 2) and (nr, nphi, 2, 2)."""
    return derivatives(field.values, field.grid, boundary_value)


def gradient(values, grid):
    """Cartesian gradient only (cheaper than :func:`derivatives`)."""
    u = np.asarray(values, dtype=float)
    us, _ = _radial_derivatives(u, grid)
    up, _ = _angular_derivatives(u, grid.nphi)
    jinv = grid._metrics[0]
    return np.stack([jinv[..., 0, 0] * us + jinv[..., 1, 0] * up,
                     jinv[..., 0, 1] * us + jinv[..., 1, 1] * up], axis=-1)


def integrate(field):
    """Midpoint rule sum(value * s * rho^2 * ds * dphi), summed exactly rounded."""
    return math.fsum((field.values * field.grid.weights).ravel())


def integrate_values(values, grid):
    return math.fsum((np.asarray(values, dtype=float) * grid.weights).ravel())


# ----------------------------------------------------------------------------
# JSON field files

def grid_envelope(grid):
    return {"version": FIELD_VERSION, "dimension": 2,
            "domain": grid.domain.to_json() if hasattr(grid.domain, "to_json")
            else grid.star.to_json(),
            "grid": grid.describe()}


def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing key {key!r}", f"{path}.{key}")
    value = obj[key]
    if kind is not None and (isinstance(value, bool) or not isinstance(value, kind)):
        raise SchemaError(f"expected {getattr(kind, '__name__', kind)}", f"{path}.{key}")
    return value


def _number_list(values, path):
    if not isinstance(values, list):
        raise SchemaError("expected an array of numbers", path)
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError("expected a number", f"{path}[{i}]")
        if not math.isfinite(v):
            raise SchemaError("non-finite value", f"{path}[{i}]")
        out.append(float(v))
    return out


def domain_from_json(doc, path="$.domain"):
    kind = _require(doc, "type", path, str)
    center = _number_list(_require(doc, "center", path), f"{path}.center")
    try:
        if kind == "ball":
            radius = _require(doc, "radius", path, (int, float))
            return BallDomain(n=len(center), center=center, radius=radius)
        if kind == "star":
            rho = _require(doc, "rho", path, dict)
            a0 = _require(rho, "a0", f"{path}.rho", (int, float))
            cos = _number_list(rho.get("cos", []), f"{path}.rho.cos")
            sin = _number_list(rho.get("sin", []), f"{path}.rho.sin")
            return StarDomain2D(center=center, a0=a0, cos=cos, sin=sin)
    except DomainInvalidError as exc:
        raise SchemaError(str(exc), path) from exc
    raise SchemaError(f"unknown domain type {kind!r}", f"{path}.type")


def grid_from_json(doc):
    if _require(doc, "version", "$", int) != FIELD_VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}", "$.version")
    if _require(doc, "dimension", "$", int) != 2:
        raise SchemaError("only dimension 2 fields are supported", "$.dimension")
    domain = domain_from_json(_require(doc, "domain", "$", dict))
    if isinstance(domain, BallDomain) and domain.n != 2:
        raise SchemaError("domain dimension does not match field dimension", "$.domain.center")
    g = _require(doc, "grid", "$", dict)
    nr = _require(g, "nr", "$.grid", int)
    nphi = _require(g, "nphi", "$.grid", int)
    try:
        return build_grid(domain, nr, nphi)
    except ValueError as exc:
        raise SchemaError(str(exc), "$.grid") from exc


def field_to_json(field):
    doc = grid_envelope(field.grid)
    doc["values"] = field.values.ravel().tolist()
    return doc


def field_from_json(doc):
    grid = grid_from_json(doc)
    values = _number_list(_require(doc, "values", "$"), "$.values")
    if len(values) != grid.size:
        raise SchemaError(
            f"expected {grid.size} values for a {grid.nr}x{grid.nphi} grid, got {len(values)}",
            "$.values")
    return ScalarField(grid, np.array(values))


def write_field(field, path):
    Path(path).write_text(json.dumps(field_to_json(field), sort_keys=True, allow_nan=False))


def read_field(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "$") from exc
    return field_from_json(doc)
