"""Elementary symmetric functions of a matrix and the Garding cones.

Matrices follow the "row = upper index" convention: the shape operator is
stored as ``A[j, i] = h_i^j`` (so ``A = g^{-1} h``), and the derivative tensor
``(sigma_k)_j^i`` as ``S[i, j]``.  With this layout the contractions used by
the geometry reduce to matrix traces::

    (sigma_k)_j^i h_i^j          = tr(S A)
    (sigma_k)_j^i delta_i^j      = tr(S)
    (sigma_k)_j^i h_i^m h_m^j    = tr(S A A)

Every function accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .exceptions import ConePreconditionError

__all__ = [
    "sigmas",
    "sigma",
    "sigma_kronecker",
    "sigma_gradient",
    "hk",
    "in_gamma_k",
    "spectrum",
    "sigmas_from_spectrum",
    "check_newton_maclaurin",
    "NewtonMaclaurinReport",
]


def _check_index(k):
    if isinstance(k, bool) or int(k) != k:
        raise TypeError(f"index k must be an integer, got {k!r}")
    return int(k)


def sigmas(A):
    """All of sigma_0 .. sigma_n of ``A`` via Newton's identities.

    Returns an array of shape ``(..., n + 1)``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    out = np.empty(A.shape[:-2] + (n + 1,))
    out[..., 0] = 1.0
    power = A
    traces = []
    for m in range(1, n + 1):
        if m > 1:
            power = power @ A
        traces.append(np.trace(power, axis1=-2, axis2=-1))
        acc = np.zeros(A.shape[:-2])
        for i in range(1, m + 1):
            acc = acc + (-1) ** (i - 1) * out[..., m - i] * traces[i - 1]
        out[..., m] = acc / m
    return out


def sigma(k, A):
    """sigma_k(A); zero for k < 0 or k > n, one for k = 0."""
    k = _check_index(k)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if k < 0 or k > n:
        return np.zeros(A.shape[:-2])[()] if A.ndim > 2 else 0.0
    return sigmas(A)[..., k][()]


def _perm_sign(perm):
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def kronecker_delta(upper, lower):
    """Generalized Kronecker symbol delta^{upper}_{lower}."""
    upper, lower = tuple(upper), tuple(lower)
    if len(set(upper)) != len(upper) or sorted(upper) != sorted(lower):
        return 0
    position = {v: i for i, v in enumerate(lower)}
    return _perm_sign([position[v] for v in upper])


def sigma_kronecker(k, A):
    """sigma_k by literal expansion of (1/k!) delta^{i..}_{j..} h_{i1}^{j1} ... h_{ik}^{jk}.

    Exponential cost; meant as an independent check for small n.
    """
    k = _check_index(k)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if k == 0:
        return 1.0
    if k < 0 or k > n:
        return 0.0
    total = 0.0
    for upper in itertools.permutations(range(n), k):
        for lower in itertools.permutations(upper):
            sign = kronecker_delta(upper, lower)
            term = float(sign)
            for a, b in zip(upper, lower):
                term *= A[b, a]  # h_a^b
            total += term
    return total / factorial(k)


def sigma_gradient(k, A):
    """The tensor (sigma_k)_j^i = d sigma_k / d h_i^j, returned as ``S[i, j]``.

    Uses S = sum_{m=0}^{k-1} (-1)^m sigma_{k-1-m}(A) A^m.
    """
    k = _check_index(k)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if k < 1 or k > n:
        raise ValueError(f"sigma_gradient needs 1 <= k <= n, got k={k}, n={n}")
    sig = sigmas(A)
    eye = np.broadcast_to(np.eye(n), A.shape)
    S = np.zeros_like(A)
    power = eye
    for m in range(k):
        if m > 0:
            power = power @ A
        S = S + ((-1) ** m * sig[..., k - 1 - m])[..., None, None] * power
    return S


def hk(k, A):
    """k-th mean curvature sigma_k(A) / C(n, k)."""
    k = _check_index(k)
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if k < 1 or k > n:
        raise ValueError(f"hk needs 1 <= k <= n, got k={k}, n={n}")
    return sigma(k, A) / comb(n, k)


def sigmas_from_spectrum(lam):
    """sigma_0..sigma_n of a vector (or stack of vectors) of eigenvalues."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.zeros(lam.shape[:-1] + (n + 1,))
    out[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i]
        for m in range(i + 1, 0, -1):
            out[..., m] = out[..., m] + x * out[..., m - 1]
    return out


def in_gamma_k(A_or_lam, k):
    """Membership in the open Garding cone Gamma_k.

    Accepts an eigenvalue vector ``(n,)`` or a matrix ``(n, n)`` (or stacks of
    matrices).  Returns ``(inside, margin)`` where ``margin`` is the minimum
    of sigma_1..sigma_k; the cone is open, so a zero margin is outside.
    """
    k = _check_index(k)
    x = np.asarray(A_or_lam, dtype=float)
    if x.ndim == 1:
        sig = sigmas_from_spectrum(x)
    else:
        sig = sigmas(x)
    n = sig.shape[-1] - 1
    if k < 1 or k > n:
        raise ValueError(f"Gamma_k needs 1 <= k <= n, got k={k}, n={n}")
    margin = np.min(sig[..., 1 : k + 1], axis=-1)
    inside = margin > 0
    if np.ndim(margin) == 0:
        return bool(inside), float(margin)
    return inside, margin


def spectrum(A, g=None):
    """Principal curvatures, sorted ascending.

    When the metric ``g`` is given, the eigenvalues are taken from the
    symmetric matrix g^{1/2} A g^{-1/2}; for a g-self-adjoint ``A`` this is
    similar to ``A`` and guarantees a real spectrum.
    """
    A = np.asarray(A, dtype=float)
    if g is None:
        lam = np.linalg.eigvals(A)
        return np.sort(lam.real, axis=-1)
    w, V = np.linalg.eigh(np.asarray(g, dtype=float))
    root = np.sqrt(w)
    half = (V * root[..., None, :]) @ np.swapaxes(V, -1, -2)
    ihalf = (V / root[..., None, :]) @ np.swapaxes(V, -1, -2)
    B = half @ A @ ihalf
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    return np.linalg.eigvalsh(B)


@dataclass
class NewtonMaclaurinReport:
    """Slacks of the Newton-MacLaurin inequalities for one spectrum.

    ``nm1_slack[m]`` is H_m^2 - H_{m-1} H_{m+1} for m = 1..min(k, n-1) (with H_0 = 1);
    ``nm2_slack[m]`` is H_{m}^{1/m} - H_{m+1}^{1/(m+1)} for m = 1..k-1.
    """

    k: int
    H: np.ndarray
    nm1_slack: dict = field(default_factory=dict)
    nm2_slack: dict = field(default_factory=dict)
    equality_case: bool = False
    tolerance: float = 1e-12

    @property
    def min_slack(self):
        values = list(self.nm1_slack.values()) + list(self.nm2_slack.values())
        return min(values) if values else 0.0

    @property
    def holds(self):
        return self.min_slack >= -self.tolerance


def check_newton_maclaurin(lam, k, tolerance=1e-12):
    """Check both Newton-MacLaurin chains for ``lam`` in Gamma_k.

    NM1 is checked as H_{m-1} H_{m+1} <= H_m^2 for m = 1..min(k, n-1), NM2 as
    H_k^{1/k} <= ... <= H_1.  Equality is flagged when the spread of ``lam``
    is at most 1e-12.
    """
    k = _check_index(k)
    lam = np.sort(np.asarray(lam, dtype=float))
    n = lam.size
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    inside, margin = in_gamma_k(lam, k)
    if not inside:
        raise ConePreconditionError(
            f"spectrum is not in Gamma_{k} (min sigma_i = {margin:.3g})")
    sig = sigmas_from_spectrum(lam)
    H = np.array([sig[m] / comb(n, m) for m in range(n + 1)])
    report = NewtonMaclaurinReport(k=k, H=H, tolerance=tolerance)
    # H_{n+1} is not defined, so the chain stops at m = n - 1
    for m in range(1, min(k, n - 1) + 1):
        report.nm1_slack[m] = float(H[m] ** 2 - H[m - 1] * H[m + 1])
    for m in range(1, k):
        report.nm2_slack[m] = float(H[m] ** (1.0 / m) - H[m + 1] ** (1.0 / (m + 1)))
    report.equality_case = bool(lam[-1] - lam[0] <= 1e-12)
    return report
