import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacelike.discretization import (BallDomain, ScalarField, StarDomain2D, build_grid,
                                      derivatives, differentiate, ellipse_radius, field_to_json,
                                      fit_fourier, integrate, read_field, write_field)
from spacelike.exceptions import DomainInvalidError, SchemaError
from spacelike.verifier import observed_order


def test_node_count_and_first_node():
    grid = build_grid(StarDomain2D.disk(1.0), 4, 8)
    assert grid.size == 32
    assert grid.x[0, 0] == pytest.approx([0.125, 0.0], abs=1e-15)
    assert np.all(grid.radius > 0)


def test_area_element_of_disk_is_s():
    grid = build_grid(StarDomain2D.disk(1.0), 8, 16)
    assert np.allclose(grid.jacobian_det, grid.s[:, None] * np.ones(16), atol=1e-15)


def test_ellipse_fourier_fit():
    dom = StarDomain2D.ellipse(1.0, 0.8, modes=32)
    phi = np.linspace(0.0, 2 * np.pi, 2001)
    exact = 0.8 / np.sqrt(0.64 * np.cos(phi) ** 2 + np.sin(phi) ** 2)
    assert np.max(np.abs(dom.rho(phi) - exact)) <= 1e-10
    assert np.allclose(ellipse_radius(phi, 1.0, 0.8), exact, atol=1e-14)


def test_fit_fourier_recovers_trig_polynomial():
    a0, cos, sin = fit_fourier(lambda p: 2.0 + 0.3 * np.cos(2 * p) - 0.1 * np.sin(3 * p), 4)
    assert a0 == pytest.approx(2.0, abs=1e-14)
    assert cos == pytest.approx((0.0, 0.3, 0.0, 0.0), abs=1e-14)
    assert sin == pytest.approx((0.0, 0.0, -0.1, 0.0), abs=1e-14)


def test_domain_validation():
    with pytest.raises(DomainInvalidError):
        StarDomain2D(a0=0.5, cos=(0.6,))
    with pytest.raises(DomainInvalidError):
        BallDomain(2, None, -1.0)
    with pytest.raises(ValueError):
        build_grid(StarDomain2D.disk(), 64, 7)


# Exact up to rounding.  On the unit disk that stays below 1e-10; elsewhere
# the polar metric amplifies ulp(u) by about (nphi / 2)^2 / s_0^2, so the
# bound is 1e-9.  64 angles resolve the ellipse's boundary series.
DOMAINS = [(StarDomain2D.disk(1.0), 1e-10), (StarDomain2D.ellipse(1.0, 0.8), 1e-9),
           (StarDomain2D(a0=1.0, cos=(0.0, 0.0, 0.1)), 1e-9),
           (StarDomain2D.disk(0.7, (0.2, -0.1)), 1e-9)]


@pytest.mark.parametrize("dom,tol", DOMAINS)
def test_linear_reproduction(dom, tol):
    grid = build_grid(dom, 16, 64)
    Du, D2u = differentiate(ScalarField.from_function(grid, lambda x1, x2: 3 + 2 * x1))
    assert np.max(np.abs(Du - [2.0, 0.0])) <= tol
    assert np.max(np.abs(D2u)) <= tol


@pytest.mark.parametrize("dom,tol", DOMAINS)
def test_quadratic_reproduction(dom, tol):
    grid = build_grid(dom, 16, 64)
    _, D2u = differentiate(ScalarField.from_function(grid, lambda x1, x2: x1 * x2))
    assert np.max(np.abs(D2u - [[0.0, 1.0], [1.0, 0.0]])) <= tol


def test_quadratic_reproduction_with_boundary_value():
    # x1^2 + x2^2 - 1 vanishes on the unit circle
    grid = build_grid(StarDomain2D.disk(1.0), 16, 32)
    Du, D2u = derivatives(np.sum(grid.x ** 2, axis=-1) - 1.0, grid, 0.0)
    assert np.max(np.abs(Du - 2 * grid.x)) <= 1e-10
    assert np.max(np.abs(D2u - 2 * np.eye(2))) <= 1e-10


def test_gradient_error_drops_by_factor_3_5():
    errs = []
    for nr in (16, 32, 64):
        grid = build_grid(StarDomain2D.disk(1.0), nr, 2 * nr)
        x1, x2 = grid.x[..., 0], grid.x[..., 1]
        Du, _ = differentiate(ScalarField(grid, np.sin(x1) * np.cos(x2)))
        exact = np.stack([np.cos(x1) * np.cos(x2), -np.sin(x1) * np.sin(x2)], axis=-1)
        errs.append(float(np.max(np.abs(Du - exact))))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


@pytest.mark.parametrize("dom", [StarDomain2D.disk(1.0), StarDomain2D.ellipse(1.0, 0.8)])
def test_derivative_order_two(dom):
    hs, e1, e2 = [], [], []
    for nr in (16, 32, 64):
        grid = build_grid(dom, nr, 2 * nr)
        x1, x2 = grid.x[..., 0], grid.x[..., 1]
        Du, D2u = differentiate(ScalarField(grid, np.exp(0.5 * x1) * np.sin(x2)))
        f = np.exp(0.5 * x1)
        exact1 = np.stack([0.5 * f * np.sin(x2), f * np.cos(x2)], axis=-1)
        exact2 = np.stack([np.stack([0.25 * f * np.sin(x2), 0.5 * f * np.cos(x2)], -1),
                           np.stack([0.5 * f * np.cos(x2), -f * np.sin(x2)], -1)], -2)
        hs.append(grid.h)
        e1.append(np.max(np.abs(Du - exact1)))
        e2.append(np.max(np.abs(D2u - exact2)))
    assert 1.8 <= observed_order(hs, e1) <= 2.2
    assert 1.8 <= observed_order(hs, e2) <= 2.2


def test_area_of_disk_and_ellipse():
    disk = build_grid(StarDomain2D.disk(1.0), 64, 128)
    ell = build_grid(StarDomain2D.ellipse(1.0, 0.8), 64, 128)
    assert abs(integrate(ScalarField(disk, np.ones(disk.shape))) - math.pi) <= 1e-3
    assert abs(integrate(ScalarField(ell, np.ones(ell.shape))) - 0.8 * math.pi) <= 1e-3
    assert integrate(ScalarField(disk, np.zeros(disk.shape))) == 0.0


def test_quadrature_exact_for_linear_on_centred_domains():
    for dom in (StarDomain2D.disk(1.0), StarDomain2D.ellipse(1.0, 0.8)):
        grid = build_grid(dom, 16, 32)
        val = integrate(ScalarField.from_function(grid, lambda x1, x2: 1.0 + 2.0 * x1 - x2))
        assert val == pytest.approx(integrate(ScalarField(grid, np.ones(grid.shape))), abs=1e-12)


def test_quadrature_order_two():
    # int of exp(|x|^2) over the unit disk is pi (e - 1); of exp(x1) it is 2 pi I_1(1)
    from scipy.special import iv
    exact = 2 * math.pi * iv(1, 1.0)
    hs, errs = [], []
    for nr in (16, 32, 64):
        grid = build_grid(StarDomain2D.disk(1.0), nr, 2 * nr)
        hs.append(grid.h)
        f = ScalarField.from_function(grid, lambda x1, x2: np.exp(x1 * x1 + x2 * x2))
        errs.append(abs(integrate(f) - math.pi * (math.e - 1.0)))
    assert 1.8 <= observed_order(hs, errs) <= 2.2
    grid = build_grid(StarDomain2D.disk(1.0), 64, 128)
    assert integrate(ScalarField.from_function(grid, lambda x1, x2: np.exp(x1))) == \
        pytest.approx(exact, abs=1e-3)


def test_round_trip_is_bit_exact(tmp_path):
    grid = build_grid(StarDomain2D.ellipse(1.0, 0.8), 8, 16)
    rng = np.random.default_rng(3)
    f = ScalarField(grid, rng.normal(size=grid.shape))
    write_field(f, tmp_path / "f.json")
    g = read_field(tmp_path / "f.json")
    assert g.grid == grid
    assert np.array_equal(g.values, f.values)
    write_field(g, tmp_path / "g.json")
    assert (tmp_path / "f.json").read_bytes() == (tmp_path / "g.json").read_bytes()


def test_steep_field_loads(tmp_path):
    grid = build_grid(StarDomain2D.disk(1.0), 8, 16)
    write_field(ScalarField.from_function(grid, lambda x1, x2: 3.0 * x1), tmp_path / "steep.json")
    assert read_field(tmp_path / "steep.json").values.shape == grid.shape


def test_missing_values_names_the_path(tmp_path):
    grid = build_grid(StarDomain2D.disk(1.0), 8, 16)
    doc = field_to_json(ScalarField(grid, np.zeros(grid.shape)))
    del doc["values"]
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError) as err:
        read_field(tmp_path / "bad.json")
    assert err.value.path == "$.values"


def test_wrong_length_and_bad_entries(tmp_path):
    grid = build_grid(StarDomain2D.disk(1.0), 8, 16)
    doc = field_to_json(ScalarField(grid, np.zeros(grid.shape)))
    doc["values"] = doc["values"][:-1]
    (tmp_path / "short.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        read_field(tmp_path / "short.json")
    doc["values"] = ["x"] * grid.size
    (tmp_path / "text.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError) as err:
        read_field(tmp_path / "text.json")
    assert err.value.path == "$.values[0]"


def test_deterministic_derivatives():
    grid = build_grid(StarDomain2D.ellipse(1.0, 0.7), 16, 32)
    v = np.cos(grid.x[..., 0]) * grid.x[..., 1]
    a = derivatives(v, grid)
    b = derivatives(v.copy(), grid)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_batched_derivatives_match_single():
    grid = build_grid(StarDomain2D.ellipse(1.0, 0.7), 8, 16)
    rng = np.random.default_rng(5)
    batch = rng.normal(size=(3,) + grid.shape)
    Db, D2b = derivatives(batch, grid, 0.0)
    for i in range(3):
        D, D2 = derivatives(batch[i], grid, 0.0)
        assert np.allclose(Db[i], D, atol=1e-12) and np.allclose(D2b[i], D2, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2),
       q11=st.floats(-1, 1), q12=st.floats(-1, 1), q22=st.floats(-1, 1))
def test_quadratics_are_reproduced(a, b, c, q11, q12, q22):
    grid = build_grid(StarDomain2D(a0=1.0, cos=(0.05, 0.1), sin=(0.0, -0.05)), 8, 16)
    x1, x2 = grid.x[..., 0], grid.x[..., 1]
    u = a + b * x1 + c * x2 + 0.5 * q11 * x1 ** 2 + q12 * x1 * x2 + 0.5 * q22 * x2 ** 2
    Du, D2u = derivatives(u, grid)
    exact = np.stack([b + q11 * x1 + q12 * x2, c + q12 * x1 + q22 * x2], -1)
    assert np.max(np.abs(Du - exact)) <= 1e-9
    assert np.max(np.abs(D2u - [[q11, q12], [q12, q22]])) <= 1e-9
