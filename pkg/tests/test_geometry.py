import math

import numpy as np
import pytest

from conftest import random_graph
from spacelike.discretization import ScalarField, StarDomain2D, build_grid
from spacelike.exceptions import GridMismatchError, NotSpacelikeError
from spacelike.geometry import (CONVENTIONS, covariant_hessian, curvature_bundle,
                                elliptic_operator, minkowski_dot, weingarten_residual,
                                write_bundle)
from spacelike.verifier import observed_order

DISK = StarDomain2D.disk(1.0)


def _field(func, nr=32, dom=DISK):
    return ScalarField.from_function(build_grid(dom, nr, 2 * nr), func)


def test_flat_graph():
    b = curvature_bundle(_field(lambda x1, x2: 0.7 + 0 * x1), 1)
    assert np.max(np.abs(b.A)) <= 1e-12
    assert np.allclose(b.N, [0.0, 0.0, 1.0])
    assert np.allclose(b.theta, -1.0) and np.allclose(b.g, np.eye(2))
    assert np.allclose(b.P, 1.0 - 0.7)
    assert weingarten_residual(b) <= 1e-10


def test_tilted_plane():
    b = curvature_bundle(_field(lambda x1, x2: 0.6 * x1), 1)
    assert np.allclose(b.g, np.diag([0.64, 1.0]), atol=1e-12)
    assert np.allclose(b.theta, -1.25, atol=1e-12)
    assert np.allclose(b.N, [0.75, 0.0, 1.25], atol=1e-12)


def test_invariants_on_random_graph():
    b = curvature_bundle(_field(random_graph), 2)
    assert np.max(np.abs(minkowski_dot(b.N, b.N) + 1.0)) <= 1e-12
    assert np.all(b.theta <= -1.0)
    assert np.max(np.abs(np.linalg.det(b.g) - (1 - np.sum(b.Du ** 2, -1)))) <= 1e-12
    gA = b.g @ b.A
    assert np.max(np.abs(gA - np.swapaxes(gA, -1, -2))) <= 1e-10
    # normal orthogonal to the tangents E_i + u_i E_3
    for i in range(2):
        T = np.zeros(b.grid.shape + (3,))
        T[..., i] = 1.0
        T[..., 2] = b.Du[..., i]
        assert np.max(np.abs(minkowski_dot(b.N, T))) <= 1e-10


def test_not_spacelike_names_worst_node():
    with pytest.raises(NotSpacelikeError) as err:
        curvature_bundle(_field(lambda x1, x2: 0.9 * x1 ** 2), 1)
    assert err.value.worst_node[0] == 31
    assert err.value.worst_value >= 1.0 - 1e-8
    assert "i=31" in str(err.value)


def test_cap_shape_operator(cap_bundles):
    errs = [float(np.max(np.abs(cap_bundles(1, nr).A - np.eye(2)))) for nr in (32, 64, 128)]
    assert errs[1] <= 1e-2
    assert 1.8 <= observed_order([1 / 32, 1 / 64, 1 / 128], errs) <= 2.2


def test_covariant_hessian_of_u(cap_bundles):
    errs = []
    for nr in (32, 64, 128):
        b = cap_bundles(1, nr)
        H = covariant_hessian(b, b.field)
        errs.append(float(np.max(np.abs(H + b.h * b.theta[..., None, None]))))
    # the identity is nearly algebraic on the grid, so the decay is faster than h^2
    assert errs[1] <= 1e-2 and observed_order([1 / 32, 1 / 64, 1 / 128], errs) >= 1.8


def test_covariant_hessian_of_constants_and_flat_graph():
    b = curvature_bundle(_field(random_graph), 1)
    assert np.max(np.abs(covariant_hessian(b, ScalarField(b.grid, np.full(b.grid.shape, 2.5))))) <= 1e-10
    flat = curvature_bundle(_field(lambda x1, x2: 0 * x1), 1)
    w = _field(lambda x1, x2: np.sin(x1) * x2)
    from spacelike.discretization import differentiate
    assert np.array_equal(covariant_hessian(flat, w), differentiate(w)[1])


@pytest.mark.parametrize("k", [1, 2])
def test_elliptic_operator_on_u(cap_bundles, k):
    errs = []
    for nr in (32, 64, 128):
        b = cap_bundles(k, nr)
        L = elliptic_operator(b, b.field)
        expect = -k * b.sigma(k) * b.theta
        assert np.all(L > 0)
        errs.append(float(np.max(np.abs(L - expect))))
    assert errs[1] <= 1e-2 and observed_order([1 / 32, 1 / 64, 1 / 128], errs) >= 1.8


def test_elliptic_operator_on_constant_and_P(cap_bundles):
    b = cap_bundles(2, 64)
    assert np.max(np.abs(elliptic_operator(b, ScalarField(b.grid, np.ones(b.grid.shape))))) <= 1e-10
    errs = [float(np.max(np.abs(elliptic_operator(cap_bundles(2, nr),
                                                  ScalarField(cap_bundles(2, nr).grid,
                                                              cap_bundles(2, nr).P)))))
            for nr in (32, 64, 128)]
    assert 1.8 <= observed_order([1 / 32, 1 / 64, 1 / 128], errs) <= 2.2


def test_weingarten_order():
    hs, cap, rnd = [], [], []
    from spacelike.hyperboloid import cap_from_angle, cap_grid
    c = cap_from_angle(2, 0.0, -math.sqrt(2.0))
    for nr in (32, 64, 128):
        hs.append(1 / nr)
        cap.append(weingarten_residual(curvature_bundle(cap_grid(c, nr, 2 * nr), 1, 0.0)))
        rnd.append(weingarten_residual(curvature_bundle(
            _field(lambda x1, x2: 0.3 * np.sin(x1) * np.sin(x2), nr), 1)))
    assert cap[1] <= 1e-2
    assert 1.8 <= observed_order(hs, cap) <= 2.2
    assert 1.8 <= observed_order(hs, rnd) <= 2.2


def test_theta_gradient_order():
    from spacelike.discretization import gradient
    hs, errs = [], []
    for nr in (32, 64, 128):
        b = curvature_bundle(_field(random_graph, nr), 1)
        rhs = -np.einsum("...ji,...j->...i", b.A, b.Du)
        hs.append(1 / nr)
        errs.append(float(np.max(np.abs(gradient(b.theta, b.grid) - rhs))))
    assert 1.8 <= observed_order(hs, errs) <= 2.2


def test_grid_mismatch():
    b = curvature_bundle(_field(random_graph, 16), 1)
    with pytest.raises(GridMismatchError):
        covariant_hessian(b, _field(random_graph, 32))


def test_bad_k():
    with pytest.raises(ValueError):
        curvature_bundle(_field(random_graph, 16), 3)


def test_write_bundle_is_deterministic(tmp_path):
    b = curvature_bundle(_field(random_graph, 8), 2)
    write_bundle(b, tmp_path / "a.json")
    write_bundle(b, tmp_path / "b.json", names=None)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert "theta" in (tmp_path / "a.json").read_text()
    assert CONVENTIONS["theta"].startswith("<N, E_3>")
