"""Sign criterion for the per-mode curvature form.

With ``H(y) = int_0^y eta g`` and ``R = xi / eta``, integration by parts turns
the bilinear form

    B(g, g) = 2 int_0^L int_0^y xi(y) eta(z) Re(g(y) conj g(z)) dz dy

into ``R(L) |H(L)|^2 - int R' |H|^2``.  Hence ``K_n = B / (lambda sinh lambda L)``
is nonpositive for every ``g`` iff ``R`` is nondecreasing and ``R(L) <= 0``
(when ``eta`` and ``xi`` have no interior zeros).  Monotonicity reads
``Q >= 0`` with

    Q = p' q - p q' - p^2 / 2 + 2 lambda^2 q^2,   R' = lambda sinh(lambda L) Q / (2 eta^2).

For ``alpha^2 > 0`` one has ``q = p' / alpha^2`` and ``Q >= 0`` becomes the
pure-``p`` inequality ``alpha^4 p^2 + 2 alpha^2 p p'' - (6 alpha^2 + 4 n^2) p'^2 <= 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import LinAlgError, eigh
from scipy.optimize import brentq

from .curvature import eta_xi, eta_xi_at
from .errors import ConvergenceError
from .flows import ShearFlow
from .grid import Grid1D, Params

TIE = 1e-9
NEAR_ZERO = 1e-10
COMMON_ZERO = 1e-8
EIG_TOL = 1e-8

HOLDS, FAILS, INDETERMINATE = "holds", "fails", "indeterminate"


# -- R and its zeros ------------------------------------------------------------


@dataclass
class ZeroInfo:
    which: str  # "eta" or "xi"
    location: float
    bracket: tuple
    common: bool = False  # shared zero of eta and xi (removable)
    near: bool = False  # flagged by magnitude, not by a sign change


@dataclass
class RatioProfile:
    y: np.ndarray
    R: np.ndarray
    dR: np.ndarray
    Q: np.ndarray
    zeros: list
    R_L: float
    valid: bool

    @property
    def interior_zeros(self) -> list:
        return [z for z in self.zeros if not z.common]


def q_numerator(flow: ShearFlow, params: Params, n: int, y) -> np.ndarray:
    """``Q = p'q - pq' - p^2/2 + 2 lambda^2 q^2`` (sign of ``R'``)."""
    lam2 = params.alpha2 + n * n
    p, dp = flow.p(y, params), flow.dp(y, params)
    q, dq = flow.q(y), flow.dq(y)
    return dp * q - p * dq - 0.5 * p**2 + 2 * lam2 * q**2


def q_scale(flow: ShearFlow, params: Params, n: int, y) -> float:
    lam2 = params.alpha2 + n * n
    p, dp = flow.p(y, params), flow.dp(y, params)
    q, dq = flow.q(y), flow.dq(y)
    terms = np.abs(dp * q) + np.abs(p * dq) + 0.5 * p**2 + 2 * lam2 * q**2
    return float(max(terms.max(), 1e-300))


def _find_zeros(f, y, vals, which, tol) -> list:
    scale = max(np.abs(vals).max(), 1e-300)
    out = []
    for i in range(len(y) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 and 0 < i:
            out.append(ZeroInfo(which, float(y[i]), (float(y[i]), float(y[i])), near=True))
        elif a * b < 0:
            r = brentq(f, y[i], y[i + 1], xtol=tol)
            out.append(ZeroInfo(which, float(r), (float(y[i]), float(y[i + 1]))))
    # near-zeros without a sign change (e.g. double roots)
    interior = np.abs(vals[1:-1]) < NEAR_ZERO * scale
    for i in np.flatnonzero(interior) + 1:
        if not any(abs(z.location - y[i]) <= y[1] - y[0] for z in out):
            out.append(ZeroInfo(which, float(y[i]), (float(y[i - 1]), float(y[i + 1])), near=True))
    return out


def _R_at_L(flow: ShearFlow, params: Params, n: int) -> float:
    """``R(L)``, taking the limit when ``eta(L) = xi(L) = 0``."""
    L = params.L
    lam = params.lam(n)
    eta_s, xi_s = eta_xi_at(flow, params, n, np.array([L]), scaled=True)
    e, x = float(eta_s[0]), float(xi_s[0])
    ref = abs(0.5 * flow.p(np.array([L]), params)[0]) + lam * abs(flow.q(np.array([L]))[0])
    if abs(e) > 1e-14 * max(ref, 1e-300) or ref == 0 and e != 0:
        return x / e * math.exp(-lam * L)
    if abs(x) > 1e-14 * max(ref, 1e-300):
        return math.copysign(math.inf, x * (e if e else 1.0))
    # common zero: q(L) = p(L) = 0, ratio of derivatives
    yL = np.array([L])
    dp, dq = flow.dp(yL, params)[0], flow.dq(yL)[0]
    deta = 0.5 * dp * math.sinh(lam * L) + lam * dq * math.cosh(lam * L)
    dxi = -lam * dq
    if deta == 0:
        return math.nan
    return dxi / deta


def ratio_R(flow: ShearFlow, params: Params, n: int, grid: Grid1D | None = None) -> RatioProfile:
    """Sample ``R = xi / eta`` and ``R'`` and locate the zeros of ``eta`` and ``xi``.

    Zeros are located by bisection on sign changes to ``1e-12 L``.  A zero
    of ``eta`` at which ``xi`` also vanishes is marked ``common``: ``R``
    extends analytically across it.
    """
    grid = grid or Grid1D(513, params.L)
    y = grid.y
    lam, L = params.lam(n), params.L
    eta_s, xi_s = eta_xi(flow, params, n, grid, scaled=True)
    tol = 1e-12 * L
    fe = lambda t: float(eta_xi_at(flow, params, n, t, scaled=True)[0])  # noqa: E731
    fx = lambda t: float(eta_xi_at(flow, params, n, t, scaled=True)[1])  # noqa: E731
    zeros = _find_zeros(fe, y, eta_s, "eta", tol) + _find_zeros(fx, y, xi_s, "xi", tol)
    xs = max(np.abs(xi_s).max(), 1e-300)
    es = max(np.abs(eta_s).max(), 1e-300)
    for z in zeros:
        other = fx(z.location) / xs if z.which == "eta" else fe(z.location) / es
        z.common = abs(other) < COMMON_ZERO
    # drop boundary zeros: they do not obstruct the criterion
    zeros = [z for z in zeros if tol < z.location < L - tol]
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(eta_s != 0, xi_s / eta_s * np.exp(lam * (L - 2 * y)), np.nan)
        Q = q_numerator(flow, params, n, y)
        # R' = lam sinh(lam L) Q / (2 eta^2), written with the scaled eta
        dR = np.where(eta_s != 0,
                      lam * 0.25 * -np.expm1(-2 * lam * L) * Q / eta_s**2 * np.exp(lam * (L - 2 * y)),
                      np.nan)
    valid = not [z for z in zeros if not z.common]
    return RatioProfile(y, R, dR, Q, zeros, _R_at_L(flow, params, n), valid)


# -- sign verdict -------------------------------------------------------------------


@dataclass
class TheoremVerdict:
    n: int
    verdict: str
    boundary_case: bool
    min_Q: float
    Q_scale: float
    R_L: float
    min_dR: float
    zeros: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.verdict} (boundary case)" if self.boundary_case else self.verdict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "verdict": self.verdict,
            "boundary_case": self.boundary_case,
            "min_Q": self.min_Q,
            "Q_scale": self.Q_scale,
            "R_L": self.R_L,
            "min_dR": self.min_dR,
            "zeros": [{"which": z.which, "y": z.location, "common": z.common} for z in self.zeros],
        }


def check_theorem(flow: ShearFlow, params: Params, n: int, grid: Grid1D | None = None,
                  tie: float = TIE) -> TheoremVerdict:
    """Decide ``K_n(g) <= 0 for all g`` from the monotonicity of ``R``.

    ``holds`` iff ``Q >= 0`` on the grid and ``R(L) <= 0``; margins within
    ``tie`` (relative) are flagged as a boundary case.  Non-removable
    interior zeros of ``eta`` or ``xi`` give ``indeterminate``.
    """
    prof = ratio_R(flow, params, n, grid)
    scale = q_scale(flow, params, n, prof.y)
    min_Q = float(prof.Q.min())
    finite = np.isfinite(prof.dR)
    min_dR = float(prof.dR[finite].min()) if finite.any() else math.nan
    R_L = prof.R_L
    if not prof.valid:
        verdict, boundary = INDETERMINATE, False
    else:
        q_rel = min_Q / scale
        rl_bad = R_L > tie or (math.isnan(R_L))
        if q_rel < -tie or rl_bad:
            verdict, boundary = FAILS, False
        else:
            verdict = HOLDS
            boundary = q_rel <= tie or abs(R_L) <= tie
    return TheoremVerdict(n, verdict, boundary, min_Q, scale, R_L, min_dR, prof.zeros)


# -- bilinear form ---------------------------------------------------------------


def bilinear_B(eta, xi, g, grid: Grid1D) -> float:
    """``2 int_0^L xi(y) Re(g(y) conj(H(y))) dy`` with ``H = int_0^y eta g``."""
    g = np.asarray(g, dtype=complex)
    H = grid.cumulative(np.asarray(eta) * g)
    return float(2 * grid.integrate(np.asarray(xi) * np.real(g * np.conj(H))))


@dataclass
class IdentityResult:
    residual: float
    scale: float
    B: float
    rhs: float


def bilinear_identity_check(flow: ShearFlow, params: Params, n: int, g, grid: Grid1D):
    """Residual of ``B(g, g) = R(L) |H(L)|^2 - int R' |H|^2``.

    Returns ``None`` when ``eta`` has a non-removable interior zero.
    """
    prof = ratio_R(flow, params, n, grid)
    if any(z.which == "eta" and not z.common for z in prof.zeros):
        return None
    lam, L = params.lam(n), params.L
    g = np.asarray(g, dtype=complex)
    eta, xi = eta_xi(flow, params, n, grid)
    H = grid.cumulative(eta * g)
    B = bilinear_B(eta, xi, g, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(H) ** 2 / eta**2
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    dRH = 0.5 * lam * math.sinh(lam * L) * prof.Q * ratio
    HL2 = abs(H[-1]) ** 2
    rhs = prof.R_L * HL2 - grid.integrate(dRH)
    scale = abs(B) + abs(prof.R_L) * HL2 + grid.integrate(np.abs(dRH))
    return IdentityResult(abs(B - rhs), scale, B, float(rhs))


# -- eigenvalue oracle -----------------------------------------------------------


@dataclass
class EigResult:
    top: float
    vector: np.ndarray
    scale: float
    weights: np.ndarray

    @property
    def nonpositive(self) -> bool:
        return self.top <= EIG_TOL * self.scale


def kernel_matrix(eta, xi, grid: Grid1D, lam: float | None = None) -> np.ndarray:
    """``S(y, z) = xi(max(y, z)) eta(min(y, z))``.

    With ``lam`` the inputs are taken as the scaled profiles of
    :func:`~qgcurvature.curvature.eta_xi` and the kernel is that of ``K_n``
    itself, ``S / (lam sinh lam L)``, evaluated without overflow.
    """
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    y = grid.y
    upper = np.arange(grid.ny)[:, None] >= np.arange(grid.ny)[None, :]
    S = np.where(upper, xi[:, None] * eta[None, :], eta[:, None] * xi[None, :])
    if lam is not None:
        S = S * np.exp(-lam * np.abs(y[:, None] - y[None, :]))
        S *= 2 / (lam * -math.expm1(-2 * lam * grid.L))
    return S


def kernel_form(eta, xi, g, grid: Grid1D, lam: float | None = None) -> float:
    """``B(g, g)`` with the quadrature of the oracle: ``Re g* W S W g``."""
    wg = grid.weights * np.asarray(g)
    return float(np.real(np.conj(wg) @ kernel_matrix(eta, xi, grid, lam) @ wg))


def definiteness_eig(eta, xi, grid: Grid1D, lam: float | None = None) -> EigResult:
    """Largest eigenvalue of ``W^{1/2} S W^{1/2}`` (Simpson weights ``W``).

    The spectrum of the kernel accumulates at zero, which stalls iterative
    eigensolvers exactly in the boundary cases; a dense symmetric solver
    computing only the top eigenpair is used instead.  The form is
    nonpositive on the grid iff ``top <= 1e-8 * scale``, with ``scale`` the
    largest weighted row sum of ``|S|``.
    """
    w = grid.weights
    sw = np.sqrt(w)
    A = sw[:, None] * kernel_matrix(eta, xi, grid, lam) * sw[None, :]
    # profiles vanish on the walls: interior nodes only
    A = A[1:-1, 1:-1]
    A = 0.5 * (A + A.T)
    scale = float(max(np.abs(A).sum(axis=1).max(), 1e-300))
    if not np.all(np.isfinite(A)):
        raise ConvergenceError("kernel matrix is not finite")
    m = grid.ny - 2
    try:
        vals, vecs = eigh(A, subset_by_index=[m - 1, m - 1])
    except LinAlgError as exc:
        raise ConvergenceError("symmetric eigensolver did not converge") from exc
    v = np.zeros(grid.ny)
    v[1:-1] = vecs[:, 0]
    v = v * np.sign(v[np.argmax(np.abs(v))])
    return EigResult(float(vals[0]), v, scale, w)


def _bump(y, a: float, b: float, plateau: float = 0.0):
    """Smooth (C-infinity) ``H`` supported on ``[a, b]`` with a flat top of
    relative width ``plateau``, and its derivative."""
    w = 0.5 * (b - a) * (1 - plateau)
    c = 0.5 * (a + b)
    half = 0.5 * (b - a) * plateau
    t = np.maximum(np.abs(y - c) - half, 0.0) / w
    inside = t < 1
    ti = np.where(inside, t, 0.0)
    H = np.where(inside, np.exp(1 - 1 / (1 - ti**2)), 0.0)
    dH = np.where(inside, -2 * ti / (1 - ti**2) ** 2 * H / w, 0.0) * np.sign(y - c)
    return H, dH


def _runs(mask) -> list:
    """``(start, stop)`` index pairs of the ``True`` runs in ``mask``."""
    out, i, m = [], 0, len(mask)
    while i < m:
        if mask[i]:
            j = i
            while j + 1 < m and mask[j + 1]:
                j += 1
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


def positivity_witness_search(eta, xi, grid: Grid1D, lam: float | None = None,
                              use_eig: bool = True, eig: EigResult | None = None):
    """A grid function ``g`` with ``B(g, g) > 0``, or ``None``.

    The top eigenvector of the weighted kernel is tried first.  After it
    come ``g = H' / eta`` with ``H`` a bump placed where ``R`` decreases or
    across an interior zero of ``eta``; when ``R(L) > 0`` a ramp ending at
    ``y = L`` is added.  A coarse sweep of bumps is last.  A
    candidate counts only if ``B`` exceeds the noise floor of the oracle.
    """
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if lam is None:
        B = lambda g: bilinear_B(eta, xi, g, grid)  # noqa: E731
    else:
        B = lambda g: _scaled_B(eta, xi, g, grid, lam)  # noqa: E731
    if use_eig:
        res = eig if eig is not None else definiteness_eig(eta, xi, grid, lam)
        scale = res.scale
    else:
        res = None
        S = kernel_matrix(eta[::max(1, grid.ny // 257)], xi[::max(1, grid.ny // 257)],
                          Grid1D(len(eta[::max(1, grid.ny // 257)]), grid.L), lam)
        scale = float(np.abs(S).sum(axis=1).max() * grid.L / max(len(S) - 1, 1))
    floor = EIG_TOL * scale
    y, L, h = grid.y, grid.L, grid.h

    def accept(g):
        g = np.array(g, dtype=float)
        g[0] = g[-1] = 0.0
        if not np.all(np.isfinite(g)):
            return None
        nrm = grid.integrate(g * g)
        if nrm <= 0:
            return None
        g = g / math.sqrt(nrm)
        return g if B(g) > floor else None

    # eta up to a positive constant factor
    eta_u = eta if lam is None else eta * np.exp(lam * (y - L))

    def from_H(dH):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(eta_u != 0, dH / eta_u, 0.0)

    if res is not None and res.top > floor:
        # top eigenvector: positive in the oracle's own quadrature
        g = res.vector / np.sqrt(res.weights)
        g = g / math.sqrt(grid.integrate(g * g))
        if B(g) > floor or kernel_form(eta, xi, g, grid, lam) > floor:
            return g
    candidates = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        R = xi / eta if lam is None else xi / eta * np.exp(lam * (L - 2 * y))
    dR = np.gradient(np.where(np.isfinite(R), R, np.nan), h)
    runs = _runs(np.nan_to_num(dR, nan=0.0) < 0)
    runs.sort(key=lambda r: np.nanmin(dR[r[0]:r[1] + 1]))
    for i, j in runs:
        a, b = y[i], y[j]
        if b - a < 4 * h:
            continue
        k = i + int(np.nanargmin(dR[i:j + 1]))
        for frac in (1.0, 0.5, 0.25, 0.1):
            half = 0.5 * frac * (b - a)
            lo, hi = max(a, y[k] - half), min(b, y[k] + half)
            if hi - lo >= 4 * h:
                candidates.append(from_H(_bump(y, lo, hi)[1]))
    crossings = np.flatnonzero(np.sign(eta[1:-2]) * np.sign(eta[2:-1]) < 0) + 1
    for i in crossings:
        for w in (0.02, 0.05, 0.1):
            lo, hi = max(y[i] - w * L, 0.0), min(y[i] + w * L, L)
            candidates.append(from_H(_bump(y, lo, hi, plateau=0.5)[1]))
    if np.isfinite(R[-1]) and R[-1] > 0:
        for w in (0.25, 0.1, 0.04):
            t = np.clip((y - (L - w * L)) / (w * L), 0.0, 1.0)
            candidates.append(from_H(0.5 * np.pi / (w * L) * np.sin(np.pi * t)))
    for g in candidates:
        found = accept(g)
        if found is not None:
            return found
    for w in L * np.array([0.25, 0.1, 0.04]):
        for c in np.linspace(0, L, 33)[1:-1]:
            found = accept(from_H(_bump(y, max(c - w, 0.0), min(c + w, L))[1]))
            if found is not None:
                return found
    return None


def _scaled_B(eta_s, xi_s, g, grid: Grid1D, lam: float) -> float:
    """``K_n``-normalised form from scaled profiles (equals ``kn_green``)."""
    from .curvature import _damped_prefix

    Ht = _damped_prefix(eta_s * np.asarray(g, dtype=complex), lam, grid)
    outer = xi_s * np.real(np.asarray(g) * np.conj(Ht))
    return float(4 / (lam * -math.expm1(-2 * lam * grid.L)) * grid.integrate(outer))


def definiteness_for(flow: ShearFlow, params: Params, n: int, grid: Grid1D) -> EigResult:
    """:func:`definiteness_eig` on the ``K_n`` kernel of a shear flow."""
    eta_s, xi_s = eta_xi(flow, params, n, grid, scaled=True)
    return definiteness_eig(eta_s, xi_s, grid, params.lam(n))


def witness_for(flow: ShearFlow, params: Params, n: int, grid: Grid1D, max_ny: int = 8193):
    """Search for a mode profile with ``K_n > 0``.

    Weak positive directions can live in a few grid cells (for instance
    where ``R'`` is slightly negative next to a wall); when the search on
    ``grid`` fails it is repeated with localised candidates on refined
    grids.  Returns a :class:`~qgcurvature.curvature.ModeProfile` (possibly
    on a finer grid) or ``None``.
    """
    from .curvature import ModeProfile

    lam = params.lam(n)
    eta_s, xi_s = eta_xi(flow, params, n, grid, scaled=True)
    eig = definiteness_eig(eta_s, xi_s, grid, lam)
    w = positivity_witness_search(eta_s, xi_s, grid, lam, eig=eig)
    # the eigenvector may be positive only in the oracle's quadrature
    if w is not None and _scaled_B(eta_s, xi_s, w, grid, lam) > EIG_TOL * eig.scale:
        return ModeProfile(n, w, grid)
    if eig.nonpositive and check_theorem(flow, params, n, grid).verdict != FAILS:
        return None
    g = grid
    while 4 * (g.ny - 1) + 1 <= max_ny:
        g = g.refine().refine()
        eta_s, xi_s = eta_xi(flow, params, n, g, scaled=True)
        w = positivity_witness_search(eta_s, xi_s, g, lam, use_eig=False)
        if w is not None:
            return ModeProfile(n, w, g)
    return None


# -- p-only inequalities -----------------------------------------------------------


@dataclass
class IneqMargins:
    n: int
    lhs: np.ndarray
    de_margin: float
    de_scale: float
    bc_value: float
    bc_margin: float
    bc_scale: float

    def verdict(self, tie: float = TIE) -> tuple[str, bool]:
        de = self.de_margin / self.de_scale
        bc = self.bc_margin / self.bc_scale if self.bc_scale > 0 else 0.0
        if de < -tie or bc < -tie:
            return FAILS, False
        return HOLDS, bool(de <= tie or bc <= tie)


def ineq_lhs(flow: ShearFlow, params: Params, n: int, y) -> np.ndarray:
    """``alpha^4 p^2 + 2 alpha^2 p p'' - (6 alpha^2 + 4 n^2) p'^2`` (``<= 0`` required).

    Equals ``-2 alpha^4 Q``.
    """
    a2 = params.alpha2
    p, dp, ddp = flow.p(y, params), flow.dp(y, params), flow.ddp(y, params)
    return a2**2 * p**2 + 2 * a2 * p * ddp - (6 * a2 + 4 * n * n) * dp**2


def ineq_lhs_printed(flow: ShearFlow, params: Params, n: int, y) -> np.ndarray:
    """The variant with ``alpha^2 p^2`` as leading term; differs from
    :func:`ineq_lhs` unless ``alpha^2 = 1`` and is kept for comparison only."""
    a2 = params.alpha2
    p, dp, ddp = flow.p(y, params), flow.dp(y, params), flow.ddp(y, params)
    return a2 * p**2 + 2 * a2 * p * ddp - (6 * a2 + 4 * n * n) * dp**2


def ineq_per_n(flow: ShearFlow, params: Params, n: int, grid: Grid1D | None = None) -> IneqMargins:
    """Margins of the differential inequality and the boundary condition.

    ``de_margin = min_y (-lhs)`` and ``bc_margin = alpha^2 p(L) p'(L) +
    2 lambda coth(lambda L) p'(L)^2``; both must be ``>= 0``.  ``bc_value``
    is the quotient form ``2 lambda p' / (alpha^2 p sinh + 2 lambda cosh p')``
    at ``y = L`` (equal to ``-R(L)``).
    """
    if params.alpha2 <= 0:
        raise ValueError("the p-only inequalities need alpha^2 > 0; use check_theorem")
    grid = grid or Grid1D(513, params.L)
    y = grid.y
    lam, L, a2 = params.lam(n), params.L, params.alpha2
    lhs = ineq_lhs(flow, params, n, y)
    p, dp, ddp = flow.p(y, params), flow.dp(y, params), flow.ddp(y, params)
    de_scale = float(max((a2**2 * p**2 + 2 * a2 * np.abs(p * ddp) + (6 * a2 + 4 * n * n) * dp**2).max(), 1e-300))
    pL, dpL = float(p[-1]), float(dp[-1])
    coth = 1 / math.tanh(lam * L)
    bc_margin = a2 * pL * dpL + 2 * lam * coth * dpL**2
    bc_scale = abs(a2 * pL * dpL) + 2 * lam * coth * dpL**2
    den = a2 * pL * math.tanh(lam * L) + 2 * lam * dpL
    bc_value = (2 * lam * dpL / den / math.cosh(lam * L)) if den != 0 else math.copysign(math.inf, dpL or 1.0)
    return IneqMargins(n, lhs, float((-lhs).min()), de_scale, bc_value, bc_margin, bc_scale)


@dataclass
class CorollaryVerdict:
    verdict: str
    boundary_case: bool
    margins: IneqMargins | None
    note: str = ""

    @property
    def label(self) -> str:
        return f"{self.verdict} (boundary case)" if self.boundary_case else self.verdict


def corollary_check(flow: ShearFlow, params: Params, grid: Grid1D | None = None) -> CorollaryVerdict:
    """Worst-case (``n = 1``) form of the p-only inequalities.

    At ``alpha^2 = 0`` one has ``p' = 0`` and both inequalities hold
    trivially; that says nothing about ``K_n`` (see :func:`check_theorem`).
    """
    if params.alpha2 == 0:
        return CorollaryVerdict(HOLDS, False, None, "alpha^2 = 0: p' vanishes, inequalities hold trivially")
    m = ineq_per_n(flow, params, 1, grid)
    v, b = m.verdict()
    return CorollaryVerdict(v, b, m)


# -- Z substitution ---------------------------------------------------------------


def z_exponent(alpha2: float) -> float:
    """``k`` in ``|p| = Z^k``: ``-alpha^2 / (2 lambda^2)`` with ``lambda^2 = alpha^2 + 1``."""
    return -alpha2 / (2 * (alpha2 + 1))


@dataclass
class ZCheck:
    Z: np.ndarray
    residual: np.ndarray  # Z'' - lambda^2 Z, >= 0 iff the n = 1 inequality holds
    zbc: float  # -lambda sinh(lambda L) Z Z' + cosh(lambda L) Z'^2 at L, >= 0 required
    sign_agreement: float  # fraction of nodes where signs match the p-inequality
    identity_residual: float


def z_substitution_check(flow: ShearFlow, params: Params, grid: Grid1D | None = None,
                         exponent: float | None = None) -> ZCheck:
    """Rewrite the ``n = 1`` inequalities in terms of ``Z = |p|^{1/k}``.

    With ``k = -alpha^2 / (2 lambda^2)`` the ``Z'^2`` terms cancel and

        alpha^4 p^2 + 2 alpha^2 p p'' - (6 alpha^2 + 4) p'^2
            = (alpha^4 / lambda^2) Z^{2k - 1} (lambda^2 Z - Z''),

    so the inequality is ``Z'' >= lambda^2 Z``.
    """
    a2 = params.alpha2
    if a2 <= 0:
        raise ValueError("Z substitution needs alpha^2 > 0")
    grid = grid or Grid1D(513, params.L)
    y = grid.y
    p, dp, ddp = flow.p(y, params), flow.dp(y, params), flow.ddp(y, params)
    if np.any(p == 0) or np.abs(p).min() < 1e-12 * np.abs(p).max():
        raise ValueError("p vanishes on [0, L]")
    k = z_exponent(a2) if exponent is None else exponent
    lam2 = a2 + 1
    lam = math.sqrt(lam2)
    s = np.sign(p)
    ap = np.abs(p)
    m = 1 / k
    Z = ap**m
    dZ = m * ap ** (m - 1) * s * dp
    ddZ = m * ((m - 1) * ap ** (m - 2) * dp**2 + ap ** (m - 1) * s * ddp)
    residual = ddZ - lam2 * Z
    L = params.L
    zbc = -lam * math.sinh(lam * L) * Z[-1] * dZ[-1] + math.cosh(lam * L) * dZ[-1] ** 2
    lhs = ineq_lhs(flow, params, 1, y)
    agree = np.sign(residual) == np.sign(-lhs)
    small = (np.abs(lhs) <= 1e-9 * np.abs(lhs).max()) | (np.abs(residual) <= 1e-9 * np.abs(residual).max())
    ident = (a2**2 / lam2) * Z ** (2 * k - 1) * (lam2 * Z - ddZ)
    terms = a2**2 * p**2 + 2 * a2 * np.abs(p * ddp) + (6 * a2 + 4) * dp**2
    ident_res = float(np.abs(ident - lhs).max() / max(terms.max(), 1e-300))
    return ZCheck(Z, residual, float(zbc), float(np.mean(agree | small)), ident_res)


# -- critical family ----------------------------------------------------------------


@dataclass(frozen=True)
class CriticalFamily:
    """Shear flows with ``alpha^2 psi' - beta = sign |z0 sinh(lambda (y - y0))|^k``."""

    alpha2: float
    y0: float
    z0: float = 1.0
    sign: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.alpha2 > 0:
            raise ValueError("critical family needs alpha^2 > 0")
        if self.z0 == 0:
            raise ValueError("z0 must be nonzero")
        if self.sign not in (1.0, -1.0, 1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def lam(self) -> float:
        return math.sqrt(self.alpha2 + 1)

    def params(self, L: float) -> Params:
        return Params(L=L, alpha2=self.alpha2, beta=self.beta)

    def R_value(self, L: float) -> float:
        """The constant value of ``R``."""
        lam = self.lam
        return -math.cosh(lam * (L - self.y0)) / math.cosh(lam * self.y0)


def critical_family(cf: CriticalFamily, params: Params) -> ShearFlow:
    """Build ``psi`` with ``psi(0) = 0`` for the critical family.

    ``psi'``, ``psi''`` and ``psi'''`` are analytic; ``psi`` itself is
    integrated adaptively.
    """
    if params.alpha2 != cf.alpha2 or params.beta != cf.beta:
        raise ValueError("params must carry the family's alpha^2 and beta")
    L = params.L
    if 0 <= cf.y0 <= L:
        raise ValueError("Z vanishes on [0, L]: need y0 < 0 or y0 > L")
    lam, k, a2 = cf.lam, z_exponent(cf.alpha2), cf.alpha2
    # W = |Z| > 0 on [0, L]
    sig = math.copysign(1.0, cf.z0 * (0.5 * L - cf.y0))

    def W(y):
        return sig * cf.z0 * np.sinh(lam * (y - cf.y0))

    def dW(y):
        return sig * cf.z0 * lam * np.cosh(lam * (y - cf.y0))

    def p(y):
        return cf.sign * W(y) ** k

    def dp(y):
        return cf.sign * k * W(y) ** (k - 1) * dW(y)

    def ddp(y):
        w = W(y)
        return cf.sign * k * ((k - 1) * w ** (k - 2) * dW(y) ** 2 + w ** (k - 1) * lam**2 * w)

    def d1(y):
        return (p(y) + cf.beta) / a2

    def d0(y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        if flat.size == 0:
            return y.copy()
        # psi(y) = y int_0^1 psi'(y t) dt
        val, _ = quad_vec(lambda t: d1(flat * t), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
        return (flat * val).reshape(y.shape)

    derivs = (d0, d1, lambda y: dp(y) / a2, lambda y: ddp(y) / a2)
    pars = {"alpha2": cf.alpha2, "y0": cf.y0, "z0": cf.z0, "sign": cf.sign, "beta": cf.beta}
    return ShearFlow.from_callables("critsinh", pars, derivs)


# -- report -----------------------------------------------------------------------


@dataclass
class CriterionReport:
    per_n: list
    margins: list
    corollary: CorollaryVerdict
    notes: list = field(default_factory=list)
    oracle: list = field(default_factory=list)

    @property
    def overall(self) -> str:
        verdicts = [v.verdict for v in self.per_n]
        if FAILS in verdicts:
            return FAILS
        if INDETERMINATE in verdicts:
            return INDETERMINATE
        return HOLDS

    @property
    def boundary_case(self) -> bool:
        return self.overall == HOLDS and any(v.boundary_case for v in self.per_n)

    @property
    def label(self) -> str:
        return f"{self.overall} (boundary case)" if self.boundary_case else self.overall

    def to_dict(self) -> dict:
        return {
            "overall": self.label,
            "per_n": [v.to_dict() for v in self.per_n],
            "margins": [None if m is None else {
                "n": m.n, "de_margin": m.de_margin, "de_scale": m.de_scale,
                "bc_value": m.bc_value, "bc_margin": m.bc_margin} for m in self.margins],
            "corollary": {"verdict": self.corollary.label, "note": self.corollary.note},
            "oracle": self.oracle,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def to_text(self) -> str:
        lines = [f"{'n':>3}  {'verdict':<24}{'min Q':>14}{'R(L)':>14}{'de margin':>14}{'bc margin':>14}"]
        for v, m in zip(self.per_n, self.margins):
            de = f"{m.de_margin:14.6e}" if m is not None else f"{'-':>14}"
            bc = f"{m.bc_margin:14.6e}" if m is not None else f"{'-':>14}"
            lines.append(f"{v.n:>3}  {v.label:<24}{v.min_Q:14.6e}{v.R_L:14.6e}{de}{bc}")
        lines.append(f"overall: {self.label}")
        lines.append(f"worst-case mode check: {self.corollary.label}")
        lines.extend(f"note: {s}" for s in self.notes)
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def criterion_report(flow: ShearFlow, params: Params, modes, grid: Grid1D | None = None,
                     oracle: bool = False) -> CriterionReport:
    grid = grid or Grid1D(513, params.L)
    per_n, margins, notes, orc = [], [], [], []
    if params.alpha2 == 0:
        notes.append("alpha^2 = 0: verdicts from R = xi/eta directly; p-only inequalities bypassed")
    for n in modes:
        v = check_theorem(flow, params, n, grid)
        per_n.append(v)
        bad = [z for z in v.zeros if z.which == "eta" and not z.common]
        if v.verdict == INDETERMINATE and bad:
            notes.append(f"n={n}: eta vanishes at y={bad[0].location:.6g} where xi does not; "
                         "the ratio test does not apply")
        margins.append(ineq_per_n(flow, params, n, grid) if params.alpha2 > 0 else None)
        if oracle and v.verdict != INDETERMINATE:
            e = definiteness_for(flow, params, n, grid)
            eig_v = HOLDS if e.nonpositive else FAILS
            orc.append({"n": n, "top": e.top, "scale": e.scale, "verdict": eig_v,
                        "agrees": eig_v == v.verdict})
    return CriterionReport(per_n, margins, corollary_check(flow, params, grid), notes, orc)
