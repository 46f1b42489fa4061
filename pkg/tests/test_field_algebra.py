import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgcurvature.algebra import (AlgebraElement, ad, coad, contact_form, contact_lift, lift_commutator,
                                 metric_inner, metric_norm, mode_element, poisson_bracket,
                                 shear_element, steady_residual)
from qgcurvature.errors import GridMismatchError
from qgcurvature.field import Field2D, y_field
from qgcurvature.flows import ShearFlow
from qgcurvature.grid import Grid1D, Params


@pytest.fixture
def grid():
    return Grid1D(65)


def smooth_field(grid, nmax, seed):
    rng = np.random.default_rng(seed)
    modes = {n: (rng.normal() + 1j * rng.normal()) * np.sin((n + 1) * np.pi * grid.y) for n in range(1, nmax + 1)}
    modes[0] = rng.normal() * np.sin(np.pi * grid.y)
    return Field2D.from_modes(modes, nmax, grid)


def test_real_field_check(grid):
    c = np.zeros((5, grid.ny), dtype=complex)
    c[3] = 1.0
    with pytest.raises(ValueError):
        Field2D(c, 1.0)
    assert not Field2D(c, 1.0, real=False).real


def test_product_matches_physical_space(grid):
    a, b = smooth_field(grid, 3, 1), smooth_field(grid, 3, 2)
    nx = 64
    _, va = a.to_physical(nx)
    _, vb = b.to_physical(nx)
    ab = (Field2D(np.pad(a.coeffs, ((3, 3), (0, 0))), 1.0) * Field2D(np.pad(b.coeffs, ((3, 3), (0, 0))), 1.0))
    _, vab = ab.to_physical(nx)
    np.testing.assert_allclose(vab, va * vb, atol=1e-12)


def test_product_truncates(grid):
    f = Field2D.from_modes({2: np.ones(grid.ny)}, 2, grid)
    sq = f * f
    # cos^2 terms: modes 0 and +-4, the latter dropped
    np.testing.assert_allclose(sq.mode(0), 2 * np.ones(grid.ny))
    assert np.abs(sq.mode(2)).max() < 1e-15


def test_calculus(grid):
    f = Field2D.from_function(lambda x, y: np.cos(2 * x) * np.sin(np.pi * y), 3, grid)
    lap = f.laplacian()
    expect = -(4 + np.pi**2) * f.mode(2)
    assert np.abs(lap.mode(2)[1:-1] - expect[1:-1]).max() < 2e-3
    np.testing.assert_allclose(f.dx().mode(2), 2j * f.mode(2))


def test_json_roundtrip(grid):
    f = smooth_field(grid, 2, 3)
    g = Field2D.from_json(f.to_json())
    assert f.allclose(g, 0.0)
    with pytest.raises(ValueError):
        Field2D.from_dict({**f.to_dict(), "ny": 7})


def test_compatibility_checks(grid):
    with pytest.raises(GridMismatchError):
        Field2D.zeros(2, grid) + Field2D.zeros(3, grid)
    with pytest.raises(GridMismatchError):
        Field2D.zeros(2, grid) + Field2D.zeros(2, Grid1D(33))


def test_bracket_antisymmetric(grid):
    a, b = smooth_field(grid, 3, 4), smooth_field(grid, 3, 5)
    assert (poisson_bracket(a, b) + poisson_bracket(b, a)).max_abs_coeff() < 1e-12


def test_ad_antisymmetric_and_metric_symmetric(grid):
    p = Params(1.0, 0.5, 1.0)
    X = AlgebraElement(smooth_field(grid, 3, 6), 0.3)
    Y = AlgebraElement(smooth_field(grid, 3, 7), -0.2)
    s = ad(X, Y) + ad(Y, X)
    assert s.stream.max_abs_coeff() < 1e-12 and abs(s.charge) < 1e-12
    assert metric_inner(X, Y, p) == pytest.approx(metric_inner(Y, X, p), rel=1e-13)
    assert metric_norm(X, p) > 0


def test_coad_is_metric_adjoint_second_order():
    p = Params(1.0, 0.5, 1.0)
    gaps = []
    for ny in (65, 129, 257):
        g = Grid1D(ny)
        flow = ShearFlow.polynomial([0, 0.3, -0.5, 0.8])
        X = shear_element(flow, p, g, 4) + mode_element(1, 0.3 * np.sin(np.pi * g.y), 4, g)
        Y = mode_element(2, (1 + 1j) * np.sin(2 * np.pi * g.y), 4, g, charge=0.4)
        Z = mode_element(1, (0.5 - 1j) * np.sin(3 * np.pi * g.y), 4, g, charge=-0.2)
        a = metric_inner(coad(X, Y, p), Z, p)
        b = metric_inner(Y, ad(X, Z), p)
        gaps.append(abs(a - b) / abs(a))
    assert gaps[-1] < 2e-4
    assert math.log2(gaps[0] / gaps[1]) > 1.8 and math.log2(gaps[1] / gaps[2]) > 1.8


def test_shear_is_steady():
    p = Params(1.0, 0.7, 1.3)
    assert steady_residual(ShearFlow.polynomial([0.1, 0.3, -0.5, 0.8, 0.4]), p) < 1e-12


def test_contact_lift_recovers_stream(grid):
    psi = smooth_field(grid, 2, 8)
    lift = contact_lift(psi)
    assert contact_form(lift).allclose(psi, 1e-12)
    other = contact_lift(smooth_field(grid, 2, 9))
    comm = lift_commutator(lift, other)
    assert all(isinstance(c, Field2D) for c in comm)


def test_y_field(grid):
    np.testing.assert_allclose(y_field(2, grid).mode(0).real, grid.y)


@settings(max_examples=15, deadline=None)
@given(s=st.floats(-3, 3), t=st.floats(-3, 3))
def test_ad_bilinear(s, t):
    g = Grid1D(33)
    X = AlgebraElement(smooth_field(g, 2, 1), 0.1)
    Y = AlgebraElement(smooth_field(g, 2, 2), 0.2)
    Z = AlgebraElement(smooth_field(g, 2, 3), -0.4)
    lhs = ad(X, Y * s + Z * t)
    rhs = ad(X, Y) * s + ad(X, Z) * t
    assert (lhs - rhs).stream.max_abs_coeff() < 1e-10 * (1 + abs(s) + abs(t))
