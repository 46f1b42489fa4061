"""Time integration of ``omega_t + {psi, omega} = 0`` in the channel.

``omega = Lap psi - alpha^2 psi + beta y`` is stored as a :class:`Field2D`;
``psi`` is recovered mode by mode with Dirichlet walls.  Modes ``n != 0``
vanish on the walls; the ``n = 0`` wall values are those of the initial
stream function and stay fixed (zero unless a stream function is given).

The Jacobian is the Arakawa average of the advective and the two flux forms
with exact (alias-free) products in ``x`` and a summation-by-parts
difference operator in ``y`` (centred inside, one-sided on the walls), which
makes the discrete energy and enstrophy exact invariants of the
semi-discrete system.  Time stepping is the classical four-stage
Runge-Kutta scheme.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .algebra import AlgebraElement, metric_inner
from .errors import SimulationBlowupError
from .field import Field2D, y_field
from .flows import ShearFlow
from .greens import dirichlet_helmholtz
from .grid import Grid1D, Params

BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class QGState:
    omega: Field2D
    time: float
    params: Params
    walls: tuple = (0.0, 0.0)  # zero-mode psi at y = 0 and y = L

    def __post_init__(self):
        if not self.omega.real:
            raise ValueError("omega must be a real field")
        if abs(self.omega.grid.L - self.params.L) > 1e-12 * self.params.L:
            raise ValueError("grid width does not match params.L")

    @property
    def psi(self) -> Field2D:
        return invert_pv(self.omega, self.params, self.walls)

    @classmethod
    def from_stream(cls, psi: Field2D, params: Params, time: float = 0.0) -> "QGState":
        """State whose stream function is ``psi`` (wall values taken from it)."""
        walls = (float(psi.mode(0)[0].real), float(psi.mode(0)[-1].real))
        return cls(forward_pv(psi, params), time, params, walls)

    @classmethod
    def shear(cls, flow: ShearFlow, params: Params, nmax: int, grid: Grid1D) -> "QGState":
        return cls.from_stream(Field2D.shear(flow(grid.y), nmax, grid), params)

    def with_omega(self, omega: Field2D, time: float) -> "QGState":
        return QGState(omega, time, self.params, self.walls)


@dataclass(frozen=True)
class RunConfig:
    """``dt`` overrides ``cfl``; with ``dt = None`` the step is
    ``cfl / (nmax max|u| + max|v| / h)`` fixed from the initial state."""

    t_end: float
    dt: float | None = None
    cfl: float = 0.5
    output_every: int = 0  # steps between snapshots; 0 keeps only the ends
    nmax: int = 32
    ny: int = 257
    dealias: bool = True

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.cfl > 0:
            raise ValueError("cfl must be positive")
        if not self.dealias:
            raise ValueError("products are always evaluated alias-free")


# -- operators ----------------------------------------------------------------


def forward_pv(psi: Field2D, params: Params) -> Field2D:
    """``omega = Lap psi - alpha^2 psi + beta y``."""
    return psi.laplacian() - psi * params.alpha2 + y_field(psi.nmax, psi.grid) * params.beta


# The time stepper works on half spectra: rows n = 0..nmax of a real field.


def _half(f: Field2D) -> np.ndarray:
    return np.array(f.coeffs[f.nmax:])


def _full(hc: np.ndarray, L: float) -> Field2D:
    return Field2D(np.concatenate([np.conj(hc[:0:-1]), hc]), L, True, _trusted=True)


def _invert_half(w: np.ndarray, y: np.ndarray, params: Params, walls, h: float) -> np.ndarray:
    rhs = -w
    rhs[0] = rhs[0] + params.beta * y
    lam2 = params.alpha2 + np.arange(w.shape[0], dtype=float) ** 2
    left = np.zeros(w.shape[0])
    right = np.zeros(w.shape[0])
    left[0], right[0] = walls
    return dirichlet_helmholtz(lam2, rhs, h, left, right)


def invert_pv(omega: Field2D, params: Params, walls=(0.0, 0.0)) -> Field2D:
    """Solve ``(Lap - alpha^2) psi = omega - beta y`` with Dirichlet walls."""
    grid = omega.grid
    return _full(_invert_half(_half(omega), grid.y, params, walls, grid.h), grid.L)


def _sbp(c: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(c)
    out[:, 1:-1] = (c[:, 2:] - c[:, :-2]) / (2 * h)
    out[:, 0] = (c[:, 1] - c[:, 0]) / h
    out[:, -1] = (c[:, -1] - c[:, -2]) / h
    return out


def sbp_dy(f: Field2D) -> Field2D:
    """Summation-by-parts ``d/dy``: centred inside, one-sided on the walls.

    With trapezoid weights ``T`` it satisfies
    ``sum T a (D b) + sum T (D a) b = a_N b_N - a_0 b_0``.
    """
    return Field2D(_sbp(f.coeffs, f.grid.h), f.grid.L, f.real, _trusted=True)


class _Transform:
    """Alias-free physical <-> half-spectrum transforms for ``nmax`` modes."""

    def __init__(self, nmax: int):
        self.nmax = nmax
        self.M = next_fast_len(3 * nmax + 1)
        self.ik = 1j * np.arange(nmax + 1)[:, None]

    def to_phys(self, hc):
        a = np.zeros((self.M // 2 + 1,) + hc.shape[1:], dtype=complex)
        a[: self.nmax + 1] = hc * self.M
        return irfft(a, n=self.M, axis=0)

    def to_spec(self, f):
        return rfft(f, axis=0)[: self.nmax + 1] / self.M


@lru_cache(maxsize=16)
def _transform(nmax: int) -> _Transform:
    return _Transform(nmax)


def _jacobian_half(ps: np.ndarray, w: np.ndarray, h: float) -> np.ndarray:
    tr = _transform(ps.shape[0] - 1)
    ik = tr.ik
    P, Px, Py = tr.to_phys(ps), tr.to_phys(ik * ps), tr.to_phys(_sbp(ps, h))
    W, Wx, Wy = tr.to_phys(w), tr.to_phys(ik * w), tr.to_phys(_sbp(w, h))
    j1 = tr.to_spec(Px * Wy - Py * Wx)
    j2 = ik * tr.to_spec(P * Wy) - _sbp(tr.to_spec(P * Wx), h)
    j3 = _sbp(tr.to_spec(Px * W), h) - ik * tr.to_spec(Py * W)
    return (j1 + j2 + j3) / 3


def jacobian(psi: Field2D, omega: Field2D) -> Field2D:
    """Arakawa average of the advective and two flux forms of ``{psi, omega}``.

    With :func:`sbp_dy` in ``y``, exact products in ``x`` and ``psi``
    constant along each wall, the trapezoid sums of ``psi J`` and
    ``omega J`` vanish identically, so energy and enstrophy are conserved by
    the semi-discrete scheme.
    """
    psi.check_compatible(omega)
    return _full(_jacobian_half(_half(psi), _half(omega), psi.grid.h), psi.grid.L)


def rhs(state: QGState) -> Field2D:
    """``-{psi, omega}``."""
    return -jacobian(state.psi, state.omega)


def velocity_bounds(psi: Field2D) -> tuple[float, float]:
    """``(max|u|, max|v|)`` with ``u = -psi_y``, ``v = psi_x`` (coefficient sums)."""
    return psi.dy().sup_norm(), psi.dx().sup_norm()


def stable_dt(state: QGState, cfl: float) -> float:
    u, v = velocity_bounds(state.psi)
    rate = state.omega.nmax * u + v / state.omega.grid.h
    return cfl / rate if rate > 0 else math.inf


def eddy_time(state: QGState) -> float:
    u, v = velocity_bounds(state.psi)
    umax = max(u, v)
    return state.params.L / umax if umax > 0 else math.inf


def _rk4_half(w0: np.ndarray, dt: float, y, params: Params, walls, h: float) -> np.ndarray:
    def f(w):
        return -_jacobian_half(_invert_half(w, y, params, walls, h), w, h)

    k1 = f(w0)
    k2 = f(w0 + 0.5 * dt * k1)
    k3 = f(w0 + 0.5 * dt * k2)
    k4 = f(w0 + dt * k3)
    return w0 + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def step(state: QGState, dt: float) -> QGState:
    """One classical RK4 step."""
    grid = state.omega.grid
    w = _rk4_half(_half(state.omega), dt, grid.y, state.params, state.walls, grid.h)
    return state.with_omega(_full(w, grid.L), state.time + dt)


# -- diagnostics ----------------------------------------------------------------


def energy(psi: Field2D, params: Params) -> float:
    """``1/2 int (alpha^2 psi^2 + |grad psi|^2)`` (the central part is constant and omitted)."""
    return 0.5 * metric_inner(AlgebraElement(psi), AlgebraElement(psi), params)


def enstrophy(omega: Field2D) -> float:
    """``int omega^2`` with the trapezoid rule in ``y``."""
    return float(2 * np.pi * np.sum(np.abs(omega.coeffs) ** 2 @ omega.grid.trapezoid))


def diagnostics(state: QGState) -> dict:
    psi = state.psi
    _, vals = state.omega.to_physical(max(4 * state.omega.nmax, 8))
    return {
        "t": state.time,
        "E": energy(psi, state.params),
        "enstrophy": enstrophy(state.omega),
        "min_omega": float(vals.min()),
        "max_omega": float(vals.max()),
    }


# -- runs -------------------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    t: float
    omega: Field2D


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    dt: float = 0.0
    steps: int = 0
    config: RunConfig | None = None

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def relative_drift(self, key: str) -> float:
        v = np.array([r[key] for r in self.records])
        return float(np.abs(v - v[0]).max() / max(abs(v[0]), 1e-300))


def evolve(state: QGState, config: RunConfig, separation=None) -> Trajectory:
    """Integrate to ``config.t_end`` with a fixed step.

    The step is adjusted down so that an integer number of steps lands on
    ``t_end``.  Raises :class:`SimulationBlowupError` (carrying the
    trajectory so far) if ``|omega|`` grows by more than ``1e6`` or becomes
    non-finite.
    """
    dt0 = config.dt if config.dt is not None else stable_dt(state, config.cfl)
    if config.t_end == 0:
        nsteps, dt = 0, 0.0
    else:
        if not math.isfinite(dt0):
            dt0 = config.t_end
        nsteps = max(1, math.ceil(config.t_end / dt0 - 1e-12))
        dt = config.t_end / nsteps
    traj = Trajectory(dt=dt, steps=nsteps, config=config)
    ref = max(state.omega.max_abs_coeff(), 1e-300)

    def record(s):
        traj.snapshots.append(Snapshot(s.time, s.omega))
        d = diagnostics(s)
        if separation is not None:
            d["separation"] = separation(s)
        traj.records.append(d)

    record(state)
    every = config.output_every
    grid = state.omega.grid
    w = _half(state.omega)
    t0 = state.time
    for k in range(1, nsteps + 1):
        w = _rk4_half(w, dt, grid.y, state.params, state.walls, grid.h)
        growth = float(np.abs(w).max())
        done = k == nsteps
        if not math.isfinite(growth) or growth > BLOWUP_FACTOR * ref:
            record(state.with_omega(_full(np.nan_to_num(w), grid.L), t0 + k * dt))
            raise SimulationBlowupError(f"omega grew to {growth:.3e} at t={t0 + k * dt:.6g}", traj)
        if done or (every and k % every == 0):
            record(state.with_omega(_full(w, grid.L), t0 + config.t_end if done else t0 + k * dt))
    return traj


def rk4_order(state: QGState, t_end: float, dt: float) -> tuple[float, list]:
    """Self-convergence order from runs with ``dt``, ``dt/2`` and ``dt/4``."""
    finals = [evolve(state, RunConfig(t_end, dt=dt / 2**k, nmax=state.omega.nmax,
                                      ny=state.omega.ny)).final.omega for k in range(3)]
    e1 = np.abs(finals[0].coeffs - finals[1].coeffs).max()
    e2 = np.abs(finals[1].coeffs - finals[2].coeffs).max()
    return float(math.log2(e1 / e2)), [float(e1), float(e2)]


# -- spreading experiment --------------------------------------------------------------


@dataclass
class SpreadingResult:
    times: np.ndarray
    separation: np.ndarray
    growth_rate: float  # slope of log separation against t
    amplification: float  # separation(T) / separation(0)
    verdict: str
    records: list

    def to_rows(self) -> list:
        return [{"t": float(t), "separation": float(s)} for t, s in zip(self.times, self.separation)]


def random_perturbation(nmax_pert: int, grid: Grid1D, nmax: int, seed: int = 0) -> Field2D:
    """Smooth random stream function with modes ``1..nmax_pert`` vanishing on the walls."""
    rng = np.random.default_rng(seed)
    y = grid.y / grid.L
    modes = {}
    for n in range(1, nmax_pert + 1):
        prof = np.zeros(grid.ny, dtype=complex)
        for k in range(1, 4):
            prof += (rng.normal() + 1j * rng.normal()) / (n * k) ** 2 * np.sin(np.pi * k * y)
        modes[n] = prof
    return Field2D.from_modes(modes, nmax, grid)


def spreading_experiment(base: ShearFlow, pert: Field2D, eps: float, config: RunConfig,
                         params: Params, verdict: str = "") -> SpreadingResult:
    """Evolve the base shear and the base plus ``eps * pert`` (stream functions)
    side by side and record their metric distance.

    ``pert`` must vanish on the walls.  The two runs are independent and are
    executed concurrently.
    """
    grid = pert.grid
    if pert.boundary_residual() > 1e-12 * max(pert.max_abs_coeff(), 1e-300) or \
            np.abs(pert.mode(0)[[0, -1]]).max() > 1e-12 * max(pert.max_abs_coeff(), 1e-300):
        raise ValueError("perturbation must vanish on the walls")
    s0 = QGState.shear(base, params, pert.nmax, grid)
    dp = pert * eps
    s1 = QGState(s0.omega + dp.laplacian() - dp * params.alpha2, 0.0, params, s0.walls)
    # both runs use the base step so that snapshots line up
    dt = config.dt if config.dt is not None else stable_dt(s1, config.cfl)
    cfg = RunConfig(config.t_end, dt=dt if math.isfinite(dt) else None, cfl=config.cfl,
                    output_every=config.output_every, nmax=config.nmax, ny=config.ny)
    with ThreadPoolExecutor(max_workers=2) as pool:
        a, b = pool.map(lambda s: evolve(s, cfg), (s0, s1))
    times, sep = [], []
    for sa, sb in zip(a.snapshots, b.snapshots):
        d = invert_pv(sb.omega, params, s0.walls) - invert_pv(sa.omega, params, s0.walls)
        times.append(sa.t)
        sep.append(math.sqrt(max(metric_inner(AlgebraElement(d), AlgebraElement(d), params), 0.0)))
    times = np.array(times)
    sep = np.array(sep)
    if eps == 0 or sep[0] == 0:
        rate, amp = 0.0, 1.0 if eps == 0 else math.nan
    else:
        amp = float(sep[-1] / sep[0])
        rate = float(np.polyfit(times, np.log(sep), 1)[0]) if len(times) > 1 else 0.0
    records = []
    for r, s in zip(b.records, sep):
        records.append({**r, "separation": float(s)})
    return SpreadingResult(times, sep, rate, amp, verdict, records)


# -- output -------------------------------------------------------------------------


DIAG_COLUMNS = ["t", "E", "enstrophy", "min_omega", "max_omega", "separation"]


def diagnostics_csv(records: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(DIAG_COLUMNS)
    for r in records:
        w.writerow([repr(float(r[c])) if c in r else "" for c in DIAG_COLUMNS])
    return buf.getvalue()


def write_trajectory(traj: Trajectory, outdir: str, records: list | None = None) -> list:
    """Write ``snap_XXXXX.json`` files and ``diagnostics.csv``; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for i, s in enumerate(traj.snapshots):
        p = os.path.join(outdir, f"snap_{i:05d}.json")
        with open(p, "w", encoding="utf-8") as fh:
            json.dump({"t": s.t, "omega": s.omega.to_dict()}, fh)
        paths.append(p)
    p = os.path.join(outdir, "diagnostics.csv")
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write(diagnostics_csv(records if records is not None else traj.records))
    paths.append(p)
    return paths


def config_dict(config: RunConfig) -> dict:
    return asdict(config)


__all__ = [
    "QGState", "RunConfig", "forward_pv", "invert_pv", "jacobian", "rhs", "step", "evolve",
    "diagnostics", "energy", "enstrophy", "eddy_time", "stable_dt", "rk4_order",
    "spreading_experiment", "random_perturbation", "SpreadingResult", "Trajectory",
    "write_trajectory", "diagnostics_csv", "sbp_dy",
]
