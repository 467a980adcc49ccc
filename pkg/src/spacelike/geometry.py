"""Pointwise geometry of a spacelike graph M = {(x, u(x))} in R^{2,1}.

Conventions (shared by every module, see :data:`CONVENTIONS`):

* ``<Y, Z> = y1 z1 + y2 z2 - y3 z3``; ``E_1, E_2, E_3`` the standard basis and
  the reference plane normal ``N_0 = E_3``.
* ``N = (Du, 1) / sqrt(1 - |Du|^2)`` (future directed, ``<N, N> = -1``).
* ``h_ij = u_ij / sqrt(1 - |Du|^2)`` and ``A = g^{-1} h``, stored with the
  upper index first: ``A[j, i] = h_i^j``.
* ``theta = <N, E_3> = -1 / sqrt(1 - |Du|^2)`` and
  ``P = <X, E_3> - <N, E_3> = -u + 1 / sqrt(1 - |Du|^2)``.
* ``(sigma_k)_j^i`` is stored as ``S[i, j]`` and the operator
  ``(sigma_k)_j^i g^{jl} nabla_i nabla_l w`` is ``tr(S g^{-1} Hess w)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from . import symfunc
from .discretization import ScalarField, derivatives, gradient, grid_envelope
from .exceptions import GridMismatchError, NotSpacelikeError

__all__ = [
    "CONVENTIONS",
    "SPACELIKE_EPS",
    "CurvatureBundle",
    "curvature_bundle",
    "covariant_hessian",
    "elliptic_operator",
    "weingarten_residual",
    "minkowski_dot",
    "write_bundle",
]

SPACELIKE_EPS = 1e-8

CONVENTIONS = {
    "metric": "diag(1, 1, -1)",
    "basis": "E_1, E_2, E_3 standard; N_0 = E_3",
    "normal": "N = (Du, 1) / sqrt(1 - |Du|^2), <N, N> = -1",
    "shape_operator": "A[j, i] = h_i^j, A = g^{-1} h",
    "sigma_gradient": "S[i, j] = (sigma_k)_j^i",
    "theta": "<N, E_3> = -1 / sqrt(1 - |Du|^2)",
    "P": "<X, E_3> - <N, E_3> = -u + 1 / sqrt(1 - |Du|^2)",
}


def minkowski_dot(Y, Z):
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    return np.sum(Y[..., :-1] * Z[..., :-1], axis=-1) - Y[..., -1] * Z[..., -1]


@dataclass(eq=False)
class CurvatureBundle:
    """Per-node geometric fields of the graph of ``field`` (all arrays ``grid.shape + ...``)."""

    field: ScalarField
    k: int
    Du: np.ndarray
    D2u: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    Gamma: np.ndarray  # Gamma[..., m, i, j] = Gamma^m_ij
    N: np.ndarray
    h: np.ndarray
    A: np.ndarray
    lam: np.ndarray
    sigmas: np.ndarray
    Hk: np.ndarray
    theta: np.ndarray
    P: np.ndarray
    X: np.ndarray
    boundary_value: float = None
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    @property
    def grid(self):
        return self.field.grid

    @property
    def u(self):
        return self.field.values

    @property
    def n(self):
        return 2

    @property
    def S(self):
        """(sigma_k)_j^i as S[..., i, j]."""
        return symfunc.sigma_gradient(self.k, self.A)

    def sigma(self, m):
        if m < 0 or m > self.n:
            return np.zeros(self.grid.shape)
        return self.sigmas[..., m]

    def scalar(self, values):
        return ScalarField(self.grid, values)

    def named_fields(self):
        """Scalar components for export, keyed by name."""
        out = {"u": self.u, "theta": self.theta, "P": self.P, "Hk": self.Hk,
               "lambda_1": self.lam[..., 0], "lambda_2": self.lam[..., 1]}
        for i in range(2):
            out[f"Du_{i + 1}"] = self.Du[..., i]
            for j in range(2):
                out[f"A_{i + 1}{j + 1}"] = self.A[..., i, j]
        for m in range(3):
            out[f"sigma_{m}"] = self.sigmas[..., m]
        return out


def _raise_not_spacelike(grid, grad_norm):
    idx = np.unravel_index(int(np.argmax(grad_norm)), grad_norm.shape)
    x = grid.x[idx]
    raise NotSpacelikeError(
        f"graph is not spacelike: |Du| = {grad_norm[idx]:.12g} >= 1 - {SPACELIKE_EPS:g} "
        f"at node (i={idx[0]}, j={idx[1]}), x = ({x[0]:.6g}, {x[1]:.6g})",
        worst_node=tuple(int(v) for v in idx), worst_value=float(grad_norm[idx]))


def curvature_bundle(field, k, boundary_value=None):
    """Compute all geometric fields of the graph of ``field``.

    ``k`` designates which H_k is stored.  ``boundary_value``, when known
    (u = c on the boundary), switches the outer ring to the Dirichlet
    closure used by the solver.
    """
    if not 1 <= k <= 2:
        raise ValueError(f"k must be 1 or 2 on a planar grid, got {k}")
    grid = field.grid
    Du, D2u = derivatives(field.values, grid, boundary_value)
    p2 = np.sum(Du * Du, axis=-1)
    grad_norm = np.sqrt(p2)
    if np.max(grad_norm) >= 1.0 - SPACELIKE_EPS:
        _raise_not_spacelike(grid, grad_norm)
    W2 = 1.0 - p2
    W = np.sqrt(W2)

    eye = np.eye(2)
    g = eye - Du[..., :, None] * Du[..., None, :]
    ginv = eye + Du[..., :, None] * Du[..., None, :] / W2[..., None, None]

    # d_l g_ij = -(u_il u_j + u_i u_jl); dg[..., l, i, j]
    dg = -(np.einsum("...il,...j->...lij", D2u, Du) + np.einsum("...i,...jl->...lij", Du, D2u))
    christ = (np.einsum("...ilj->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)
    Gamma = 0.5 * np.einsum("...ml,...lij->...mij", ginv, christ)

    N = np.concatenate([Du, np.ones(grid.shape + (1,))], axis=-1) / W[..., None]
    h = D2u / W[..., None, None]
    A = ginv @ h
    sig = symfunc.sigmas(A)
    lam = symfunc.spectrum(A, g)
    Hk = sig[..., k] / comb(2, k)
    theta = -1.0 / W
    P = -field.values + 1.0 / W
    X = np.concatenate([grid.x, field.values[..., None]], axis=-1)

    _enforce_invariants(N, g, W2, A)
    return CurvatureBundle(field=field, k=int(k), Du=Du, D2u=D2u, g=g, ginv=ginv, Gamma=Gamma,
                           N=N, h=h, A=A, lam=lam, sigmas=sig, Hk=Hk, theta=theta, P=P, X=X,
                           boundary_value=boundary_value)


def _enforce_invariants(N, g, W2, A):
    scale = np.maximum(1.0, np.abs(N[..., -1]) ** 2)
    if np.max(np.abs(minkowski_dot(N, N) + 1.0) / scale) > 1e-12:
        raise AssertionError("normal is not unit timelike")
    if np.max(np.abs(np.linalg.det(g) - W2)) > 1e-12:
        raise AssertionError("det g differs from 1 - |Du|^2")
    gA = g @ A
    asym = np.abs(gA - np.swapaxes(gA, -1, -2))
    if np.max(asym / np.maximum(1.0, np.abs(gA))) > 1e-10:
        raise AssertionError("shape operator is not g-self-adjoint")


def _same_grid(bundle, w):
    if w.grid != bundle.grid:
        raise GridMismatchError("field and bundle live on different grids")


def covariant_hessian(bundle, w):
    """nabla_i nabla_j w = d_ij w - Gamma^m_ij d_m w, shape grid.shape + (2, 2)."""
    _same_grid(bundle, w)
    Dw, D2w = derivatives(w.values, w.grid)
    return D2w - np.einsum("...mij,...m->...ij", bundle.Gamma, Dw)


def elliptic_operator(bundle, w):
    """(sigma_k)_j^i g^{jl} nabla_i nabla_l w at every node."""
    _same_grid(bundle, w)
    inside, _ = symfunc.in_gamma_k(bundle.A, bundle.k)
    if not np.all(inside):
        warnings.warn(f"shape operator leaves Gamma_{bundle.k} at {int(np.sum(~inside))} nodes; "
                      "the operator is not elliptic there", RuntimeWarning, stacklevel=2)
    hess = covariant_hessian(bundle, w)
    return np.einsum("...ij,...jl,...il->...", bundle.S, bundle.ginv, hess)


def tangent_vectors(bundle):
    """dX/dx_j = E_j + u_j E_3 as T[..., c, j] (component c, direction j)."""
    T = np.zeros(bundle.grid.shape + (3, 2))
    T[..., 0, 0] = 1.0
    T[..., 1, 1] = 1.0
    T[..., 2, :] = bundle.Du
    return T


def weingarten_residual(bundle, norm="max"):
    """Residual of d N / d x_i = h_i^j dX/dx_j with discrete derivatives of N."""
    grid = bundle.grid
    dN = np.stack([gradient(bundle.N[..., c], grid) for c in range(3)], axis=-2)  # [..., c, i]
    rhs = np.einsum("...ji,...cj->...ci", bundle.A, tangent_vectors(bundle))
    res = np.sqrt(np.sum((dN - rhs) ** 2, axis=(-2, -1)))
    return _reduce(res, grid, norm)


def _reduce(res, grid, norm):
    if norm == "max":
        return float(np.max(res))
    if norm == "l2":
        area = float(np.sum(grid.weights))
        return float(np.sqrt(np.sum(res ** 2 * grid.weights) / area))
    if norm == "field":
        return res
    raise ValueError(f"unknown norm {norm!r}")


def write_bundle(bundle, path, names=None):
    """Write selected scalar components as one multi-field JSON document."""
    fields = bundle.named_fields()
    if names is not None:
        fields = {k: fields[k] for k in names}
    doc = grid_envelope(bundle.grid)
    doc["k"] = bundle.k
    doc["values"] = {name: np.asarray(v).ravel().tolist() for name, v in fields.items()}
    Path(path).write_text(json.dumps(doc, sort_keys=True, allow_nan=False))
