"""Sectional curvature along steady shear flows.

For ``X = psi(y)`` and ``Y = sum_n g_n(y) e^{inx}`` the unnormalised curvature
``K(X, Y) = <R(X, Y)Y, X>`` splits into independent Fourier modes,
``K = sum_n n^2 K_n`` (per unit length in ``x``; the area-weighted value on
the cylinder carries an extra ``2 pi``).  Three independent routes are
provided:

``kn_integral``
    ``K_n = 1/4 int conj(phi) p g + 1/2 int conj(phi') q g - int q^2 |g|^2``
    with ``phi`` from the Green's-function representation,
``kn_green``
    the triangle double integral with kernel ``xi(y) eta(z)``,
``curvature_arnold``
    Arnold's four-term formula evaluated with the discrete algebra operations
    of :mod:`qgcurvature.algebra`; works for arbitrary (non-shear) ``X``.

Here ``p = alpha^2 psi' - beta``, ``q = psi''`` and ``lambda^2 = alpha^2 + n^2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, ad, coad, metric_inner
from .errors import DegeneratePlaneError
from .flows import ShearFlow
from .grid import Grid1D, Params, d1
from .greens import HelmholtzKernel, solve_bvp_green

# above this value of lambda*L the prefix integrals switch to the damped recursion
LARGE_LAMBDA_L = 300.0
NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class ModeProfile:
    """Complex profile ``g_n`` of a single Fourier mode ``n != 0``."""

    n: int
    g: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        if self.n == 0:
            raise ValueError("mode number must be nonzero")
        g = np.array(self.g, dtype=complex)
        if g.shape != (self.grid.ny,):
            raise ValueError(f"profile has shape {g.shape}, grid has {self.grid.ny} points")
        if not np.all(np.isfinite(g)):
            raise ValueError("profile must be finite")
        scale = max(np.abs(g).max(), 1e-300)
        if abs(g[0]) > 1e-12 * scale or abs(g[-1]) > 1e-12 * scale:
            raise ValueError("mode profiles must vanish at y = 0 and y = L")
        g[0] = g[-1] = 0.0
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    def conjugate(self) -> "ModeProfile":
        return ModeProfile(-self.n, np.conj(self.g), self.grid)

    def scaled(self, c: complex) -> "ModeProfile":
        return ModeProfile(self.n, c * self.g, self.grid)

    def coarsen(self) -> "ModeProfile | None":
        """Every other node, when that still gives a valid grid."""
        if (self.grid.ny - 1) % 4:
            return None
        return ModeProfile(self.n, self.g[::2], Grid1D((self.grid.ny + 1) // 2, self.grid.L))


@dataclass(frozen=True)
class PhiProfile:
    phi: np.ndarray
    dphi: np.ndarray | None = None


# -- eta / xi -----------------------------------------------------------------


def eta_xi_at(flow: ShearFlow, params: Params, n: int, y, scaled: bool = False):
    """``eta``, ``xi`` at arbitrary points.

    With ``scaled=True`` returns ``eta e^{-lambda y}`` and
    ``xi e^{-lambda (L - y)}``, which stay bounded for any ``lambda``.
    """
    if n == 0:
        raise ValueError("n must be nonzero")
    y = np.asarray(y, dtype=float)
    lam, L = params.lam(n), params.L
    p = flow.p(y, params)
    q = flow.q(y)
    if scaled:
        e0, e1 = np.exp(-2 * lam * y), np.exp(-2 * lam * (L - y))
        eta = 0.25 * p * (1 - e0) + 0.5 * lam * q * (1 + e0)
        xi = 0.25 * p * (1 - e1) - 0.5 * lam * q * (1 + e1)
    else:
        eta = 0.5 * p * np.sinh(lam * y) + lam * q * np.cosh(lam * y)
        xi = 0.5 * p * np.sinh(lam * (L - y)) - lam * q * np.cosh(lam * (L - y))
    return eta, xi


def eta_xi(flow: ShearFlow, params: Params, n: int, grid: Grid1D, scaled: bool = False):
    """``(eta, xi)`` sampled on ``grid``."""
    return eta_xi_at(flow, params, n, grid.y, scaled)


def _damped_prefix(f, lam: float, grid: Grid1D) -> np.ndarray:
    """``int_0^{y_j} e^{-lam (y_j - z)} f(z) dz`` at every node."""
    if lam * grid.L <= LARGE_LAMBDA_L:
        y = grid.y
        return np.exp(-lam * y) * grid.cumulative(np.exp(lam * y) * f)
    # exact exponential weights against the piecewise-linear interpolant (second order)
    h = grid.h
    a = lam * h
    decay = math.exp(-a)
    i0 = -math.expm1(-a) / lam
    i1 = (-math.expm1(-a) - a * decay) / lam**2
    w_prev = i1 / h
    w_here = i0 - w_prev
    out = np.zeros(len(f), dtype=np.result_type(f, float))
    for j in range(1, len(f)):
        out[j] = decay * out[j - 1] + w_here * f[j] + w_prev * f[j - 1]
    return out


def _damped_suffix(f, lam: float, grid: Grid1D) -> np.ndarray:
    return _damped_prefix(np.asarray(f)[::-1], lam, grid)[::-1]


def _scaled_integrals(flow, params, mode: ModeProfile):
    """``eta_s, xi_s, Ht, St`` with ``H = e^{lam y} Ht = int_0^y eta g`` and
    ``S = e^{lam (L-y)} St = int_y^L xi g``."""
    lam = params.lam(mode.n)
    eta_s, xi_s = eta_xi(flow, params, mode.n, mode.grid, scaled=True)
    Ht = _damped_prefix(eta_s * mode.g, lam, mode.grid)
    St = _damped_suffix(xi_s * mode.g, lam, mode.grid)
    return eta_s, xi_s, Ht, St


# -- phi ----------------------------------------------------------------------


def phi_direct(flow: ShearFlow, params: Params, mode: ModeProfile) -> np.ndarray:
    """Solve ``lambda^2 phi - phi'' = p g - 2 (q g)'`` through the Green's kernel."""
    grid = mode.grid
    y = grid.y
    rhs = flow.p(y, params) * mode.g - 2 * d1(flow.q(y) * mode.g, grid.h)
    return solve_bvp_green(HelmholtzKernel(params.lam(mode.n), params.L), rhs, grid)


def phi_ibp(flow: ShearFlow, params: Params, mode: ModeProfile) -> PhiProfile:
    """``phi`` and ``phi'`` after integrating the derivative term by parts.

    ``phi = 2/(lam sinh lam L) [sinh lam(L-y) int_0^y eta g + sinh lam y int_y^L xi g]``
    and ``phi' = 2 q g - 2/sinh(lam L) [cosh lam(L-y) int_0^y eta g - cosh lam y int_y^L xi g]``.
    """
    lam, L = params.lam(mode.n), params.L
    y = mode.grid.y
    _, _, Ht, St = _scaled_integrals(flow, params, mode)
    den = -math.expm1(-2 * lam * L)
    ea, eb = np.exp(-2 * lam * (L - y)), np.exp(-2 * lam * y)
    phi = (2 / lam) * ((1 - ea) * Ht + (1 - eb) * St) / den
    dphi = 2 * flow.q(y) * mode.g - 2 * ((1 + ea) * Ht - (1 + eb) * St) / den
    phi[0] = phi[-1] = 0.0
    return PhiProfile(phi, dphi)


def compute_phi(flow: ShearFlow, params: Params, mode: ModeProfile, method: str = "ibp") -> PhiProfile:
    if method == "ibp":
        return phi_ibp(flow, params, mode)
    if method == "direct":
        return PhiProfile(phi_direct(flow, params, mode))
    raise ValueError(f"unknown method {method!r}")


# -- K_n ----------------------------------------------------------------------


def kn_integral(flow: ShearFlow, params: Params, mode: ModeProfile) -> float:
    grid = mode.grid
    y = grid.y
    ph = phi_ibp(flow, params, mode)
    p, q = flow.p(y, params), flow.q(y)
    g = mode.g
    integrand = (0.25 * np.conj(ph.phi) * p * g + 0.5 * np.conj(ph.dphi) * q * g
                 - q**2 * np.abs(g) ** 2)
    return float(grid.integrate(integrand).real)


def kn_green(flow: ShearFlow, params: Params, mode: ModeProfile) -> float:
    """``K_n = 2/(lam sinh lam L) int_0^L int_0^y xi(y) eta(z) Re(conj g(z) g(y)) dz dy``.

    The inner integral is accumulated as a prefix sum, so the cost is linear
    in the number of grid points.
    """
    lam, L = params.lam(mode.n), params.L
    _, xi_s, Ht, _ = _scaled_integrals(flow, params, mode)
    outer = xi_s * np.real(mode.g * np.conj(Ht))
    return float(4 / (lam * -math.expm1(-2 * lam * L)) * mode.grid.integrate(outer))


def kn_direct_fd(flow: ShearFlow, params: Params, mode: ModeProfile) -> float:
    """Brute-force reference: finite-difference ``phi`` and the defining
    formula with ``phi''`` (second order, independent of the kernels)."""
    from .greens import solve_bvp_fd

    grid = mode.grid
    y, h = grid.y, grid.h
    lam = params.lam(mode.n)
    p, q = flow.p(y, params), flow.q(y)
    rhs = p * mode.g - 2 * d1(q * mode.g, h)
    k = HelmholtzKernel(lam, params.L)
    phi = solve_bvp_fd(k, rhs.real, grid) + 1j * solve_bvp_fd(k, rhs.imag, grid)
    lphi = np.zeros_like(phi)
    lphi[1:-1] = lam**2 * phi[1:-1] - (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
    integrand = 0.25 * np.conj(phi) * lphi - q**2 * np.abs(mode.g) ** 2
    return float(grid.integrate(integrand).real)


def curvature_scale(flow: ShearFlow, params: Params, mode: ModeProfile) -> float:
    """Natural magnitude of ``K_n``: ``(|p|^2/lam^2 + |q|^2) int |g|^2``."""
    y = mode.grid.y
    lam = params.lam(mode.n)
    pq = np.max(flow.p(y, params) ** 2) / lam**2 + np.max(flow.q(y) ** 2)
    return float(pq * mode.grid.integrate(np.abs(mode.g) ** 2))


KN_METHODS = {"green": kn_green, "integral": kn_integral, "direct": kn_direct_fd}


@dataclass
class ModeCurvature:
    n: int
    K_n: float
    method: str
    err_est: float = float("nan")
    below_noise: bool = False


@dataclass
class CurvatureReport:
    """Per-mode ``K_n`` values; ``total = sum n^2 K_n`` over the listed entries."""

    entries: list = field(default_factory=list)
    area_factor: float = 2 * math.pi
    normalized: float | None = None
    norms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(e.n**2 * e.K_n for e in self.entries))

    @property
    def area_weighted_total(self) -> float:
        """``<R(X,Y)Y, X>`` with the metric integrated over the whole cylinder."""
        return self.area_factor * self.total

    def to_rows(self) -> list:
        return [{"n": e.n, "K_n": e.K_n, "method": e.method, "err_est": e.err_est,
                 "below_noise": e.below_noise} for e in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["n", "K_n", "method", "err_est"])
        for e in self.entries:
            w.writerow([e.n, repr(float(e.K_n)), e.method, repr(float(e.err_est))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "entries": self.to_rows(),
            "total": self.total,
            "area_weighted_total": self.area_weighted_total,
            "normalized": self.normalized,
            "norms": self.norms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _mode_value(flow, params, mode, method):
    fn = KN_METHODS[method]
    K = fn(flow, params, mode)
    coarse = mode.coarsen()
    err = float("nan")
    if coarse is not None:
        order = 4.0 if method in ("green", "integral") else 2.0
        err = abs(K - fn(flow, params, coarse)) / (2**order - 1)
    scale = curvature_scale(flow, params, mode)
    below = abs(K) <= NOISE_FLOOR * scale
    return ModeCurvature(mode.n, 0.0 if below else K, method, err, below)


def total_curvature(flow: ShearFlow, params: Params, pert, method: str = "green",
                    workers: int | None = None) -> CurvatureReport:
    """``K = sum n^2 K_n`` for the real perturbation ``sum_m g_m e^{imx} + c.c.``.

    Each listed mode contributes its own entry and the entry of its
    conjugate partner ``-n``; listing both ``n`` and ``-n`` is an error.
    """
    if method not in KN_METHODS:
        raise ValueError(f"unknown method {method!r}")
    seen = set()
    for m in pert:
        if abs(m.n) in seen:
            raise ValueError(f"duplicate mode {m.n}")
        seen.add(abs(m.n))
    modes = []
    for m in pert:
        modes.extend([m, m.conjugate()])
    if workers and workers > 1 and len(modes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda m: _mode_value(flow, params, m, method), modes))
    else:
        entries = [_mode_value(flow, params, m, method) for m in modes]
    return CurvatureReport(entries)


# -- Arnold-formula route -----------------------------------------------------


def curvature_arnold(X: AlgebraElement, Y: AlgebraElement, params: Params) -> float:
    """Arnold's formula

    ``K = 1/4 (|A + B|^2 + 2 <C, B - A> - 3 |C|^2 - 4 <coad_X X, coad_Y Y>)``

    with ``A = coad(X, Y)``, ``B = coad(Y, X)`` and ``C = ad(X, Y)``.
    """
    A = coad(X, Y, params)
    B = coad(Y, X, params)
    C = ad(X, Y)
    cxx = coad(X, X, params)
    cyy = coad(Y, Y, params)
    m = lambda u, v: metric_inner(u, v, params)  # noqa: E731
    AB = A + B
    return 0.25 * (m(AB, AB) + 2 * m(C, B - A) - 3 * m(C, C) - 4 * m(cxx, cyy))


def deformation_D(X: AlgebraElement, Y: AlgebraElement, params: Params) -> AlgebraElement:
    """``coad(X, Y) + ad(X, Y)``; vanishes identically iff ``X`` is a Killing field."""
    return coad(X, Y, params) + ad(X, Y)


def curvature_two_term(X: AlgebraElement, Y: AlgebraElement, params: Params) -> float:
    """``1/4 |coad(Y,X) + D(X,Y)|^2 - <ad(X,Y), D(X,Y)> - <D(X,X), D(Y,Y)>``."""
    D = deformation_D(X, Y, params)
    first = coad(Y, X, params) + D
    m = lambda u, v: metric_inner(u, v, params)  # noqa: E731
    return (0.25 * m(first, first) - m(ad(X, Y), D)
            - m(deformation_D(X, X, params), deformation_D(Y, Y, params)))


def normalized_sectional(K: float, X: AlgebraElement, Y: AlgebraElement, params: Params,
                         tol: float = 1e-12) -> float:
    """``K / (|X|^2 |Y|^2 - <X, Y>^2)``."""
    xx = metric_inner(X, X, params)
    yy = metric_inner(Y, Y, params)
    xy = metric_inner(X, Y, params)
    gram = xx * yy - xy * xy
    if not gram > tol * xx * yy or gram <= 0:
        raise DegeneratePlaneError(f"Gram determinant {gram:.3e} too small")
    return K / gram
