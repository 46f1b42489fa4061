import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgcurvature.algebra import mode_element, shear_element
from qgcurvature.curvature import (CurvatureReport, ModeCurvature, ModeProfile, compute_phi,
                                   curvature_arnold, curvature_scale, curvature_two_term, kn_direct_fd,
                                   kn_green, kn_integral, normalized_sectional, total_curvature)
from qgcurvature.errors import DegeneratePlaneError
from qgcurvature.flows import ShearFlow
from qgcurvature.grid import Grid1D, Params

FLOW = ShearFlow.polynomial([0, 0.3, -0.5, 0.8, 0.4])
PARAMS = Params(1.0, 0.25, 1.0)


def profile(grid, k=1, c=1 + 0.5j):
    return c * np.sin(k * np.pi * grid.y) + 0.3 * np.sin((k + 2) * np.pi * grid.y)


def test_mode_profile_validation(grid513):
    with pytest.raises(ValueError):
        ModeProfile(0, profile(grid513), grid513)
    with pytest.raises(ValueError):
        ModeProfile(1, np.ones(grid513.ny), grid513)
    with pytest.raises(ValueError):
        ModeProfile(1, np.ones(5), grid513)
    m = ModeProfile(2, profile(grid513), grid513)
    assert m.conjugate().n == -2
    assert m.coarsen().grid.ny == 257
    assert ModeProfile(1, np.sin(np.pi * Grid1D(7).y), Grid1D(7)).coarsen() is None


def test_green_and_integral_agree(grid513):
    for n in (1, 2, 5):
        m = ModeProfile(n, profile(grid513), grid513)
        a, b = kn_green(FLOW, PARAMS, m), kn_integral(FLOW, PARAMS, m)
        assert a == pytest.approx(b, rel=1e-7)


def test_direct_fd_second_order():
    errs = []
    for ny in (129, 257, 513):
        g = Grid1D(ny)
        m = ModeProfile(2, profile(g), g)
        errs.append(abs(kn_direct_fd(FLOW, PARAMS, m) - kn_green(FLOW, PARAMS, m)))
    assert math.log2(errs[0] / errs[1]) > 1.8
    assert math.log2(errs[1] / errs[2]) > 1.8


def test_phi_routes_agree(grid513):
    m = ModeProfile(3, profile(grid513), grid513)
    a = compute_phi(FLOW, PARAMS, m, "ibp").phi
    b = compute_phi(FLOW, PARAMS, m, "direct").phi
    assert np.abs(a - b).max() < 1e-4 * np.abs(a).max()


def test_conjugate_mode_same_value(grid513):
    m = ModeProfile(2, profile(grid513), grid513)
    assert kn_green(FLOW, PARAMS, m.conjugate()) == pytest.approx(kn_green(FLOW, PARAMS, m), rel=1e-12)


def test_large_lambda_branch():
    # lambda L above the overflow threshold still gives finite, consistent values
    g = Grid1D(2049)
    p = Params(1.0, 1.0e5, 0.5)
    m = ModeProfile(1, profile(g), g)
    a, b = kn_green(FLOW, p, m), kn_integral(FLOW, p, m)
    assert math.isfinite(a) and a == pytest.approx(b, rel=1e-6)


def test_arnold_two_term_and_green_total(grid513):
    nmax = 8
    X = shear_element(FLOW, PARAMS, grid513, nmax)
    g = profile(grid513)
    Y = mode_element(2, g, nmax, grid513)
    k_arnold = curvature_arnold(X, Y, PARAMS)
    assert curvature_two_term(X, Y, PARAMS) == pytest.approx(k_arnold, rel=1e-10)
    rep = total_curvature(FLOW, PARAMS, [ModeProfile(2, g, grid513)])
    assert rep.area_weighted_total == pytest.approx(k_arnold, rel=1e-3)


def test_total_curvature_report(grid513):
    pert = [ModeProfile(1, profile(grid513), grid513), ModeProfile(3, profile(grid513, 2), grid513)]
    rep = total_curvature(FLOW, PARAMS, pert)
    assert [e.n for e in rep.entries] == [1, -1, 3, -3]
    assert rep.total == pytest.approx(sum(e.n**2 * e.K_n for e in rep.entries))
    assert all(e.err_est < 1e-6 * abs(e.K_n) for e in rep.entries)
    lines = rep.to_csv().split("\r\n")
    assert lines[0] == "n,K_n,method,err_est" and len(lines) == 6
    d = json.loads(rep.to_json())
    assert d["total"] == rep.total
    par = total_curvature(FLOW, PARAMS, pert, workers=3)
    assert [e.K_n for e in par.entries] == [e.K_n for e in rep.entries]


def test_total_curvature_errors(grid513):
    m = ModeProfile(1, profile(grid513), grid513)
    with pytest.raises(ValueError):
        total_curvature(FLOW, PARAMS, [m, m.conjugate()])
    with pytest.raises(ValueError):
        total_curvature(FLOW, PARAMS, [m], method="bogus")


def test_below_noise_flag(grid513):
    # psi'' = 0 with p = 0: K_n vanishes identically
    flow = ShearFlow.polynomial([0.0, 1.0])
    p = Params(1.0, 1.0, 1.0)
    rep = total_curvature(flow, p, [ModeProfile(1, profile(grid513), grid513)])
    assert all(e.below_noise and e.K_n == 0.0 for e in rep.entries)


def test_normalized_sectional(grid513):
    X = shear_element(FLOW, PARAMS, grid513, 4)
    Y = mode_element(1, profile(grid513), 4, grid513)
    K = curvature_arnold(X, Y, PARAMS)
    assert math.isfinite(normalized_sectional(K, X, Y, PARAMS))
    with pytest.raises(DegeneratePlaneError):
        normalized_sectional(K, X, X * 2.0, PARAMS)


def test_report_defaults():
    rep = CurvatureReport([ModeCurvature(1, -1.0, "green"), ModeCurvature(-1, -1.0, "green")])
    assert rep.total == -2.0
    assert rep.area_weighted_total == pytest.approx(-4 * math.pi)


@settings(max_examples=20, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(-3, 3), n=st.integers(1, 5))
def test_quadratic_in_profile(re, im, n):
    g = Grid1D(129)
    m = ModeProfile(n, profile(g), g)
    c = complex(re, im)
    k1 = kn_green(FLOW, PARAMS, m)
    kc = kn_green(FLOW, PARAMS, m.scaled(c))
    assert kc == pytest.approx(abs(c) ** 2 * k1, rel=1e-9, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(coeffs=st.lists(st.floats(-2, 2), min_size=2, max_size=5), n=st.integers(1, 6), seed=st.integers(0, 10**6))
def test_nonpositive_without_rotation(coeffs, n, seed):
    g = Grid1D(257)
    rng = np.random.default_rng(seed)
    prof = sum((rng.normal() + 1j * rng.normal()) * np.sin(k * np.pi * g.y) for k in range(1, 4))
    m = ModeProfile(n, prof, g)
    flow = ShearFlow.polynomial(coeffs)
    p = Params(1.0, 0.0, 0.0)
    assert kn_green(flow, p, m) <= 1e-10 * curvature_scale(flow, p, m)
