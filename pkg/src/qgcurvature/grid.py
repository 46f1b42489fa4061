"""Physical parameters, the uniform y-grid and the 1D quadrature rules.

Everything in the y-direction lives on a uniform grid ``y_j = j L / (ny - 1)``
with an odd number of points so that composite Simpson applies directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import GridMismatchError


@dataclass(frozen=True)
class Params:
    """Channel width ``L``, Froude number ``alpha2`` and Rossby parameter ``beta``."""

    L: float = 1.0
    alpha2: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("L", "alpha2", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.alpha2 < 0:
            raise ValueError("alpha2 must be nonnegative")

    def lam(self, n: int) -> float:
        """Helmholtz constant ``sqrt(alpha2 + n^2)`` of Fourier mode ``n``."""
        return math.sqrt(self.alpha2 + n * n)


def simpson_weights(m: int, h: float) -> np.ndarray:
    """Weights of a fourth-order rule on ``m`` equal intervals of width ``h``.

    Even ``m`` uses composite Simpson; odd ``m >= 3`` closes the last three
    intervals with the 3/8 rule; ``m == 1`` is the trapezoid rule and
    ``m == 0`` gives a single zero weight.
    """
    if m < 0:
        raise ValueError("interval count must be nonnegative")
    w = np.zeros(m + 1)
    if m == 0:
        return w
    if m == 1:
        w[:] = h / 2
        return w
    k = m if m % 2 == 0 else m - 3
    if k > 0:
        w[0:k + 1:2] += 2 * h / 3
        w[1:k:2] += 4 * h / 3
        w[0] -= h / 3
        w[k] -= h / 3
    if k < m:
        w[k:] += np.array([3, 9, 9, 3]) * h / 8
    return w


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[0, L]`` with ``ny`` (odd, >= 5) points."""

    ny: int
    L: float = 1.0

    def __post_init__(self):
        if self.ny < 5 or self.ny % 2 == 0:
            raise ValueError(f"ny must be odd and >= 5, got {self.ny}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.ny - 1)

    @cached_property
    def y(self) -> np.ndarray:
        y = np.linspace(0.0, self.L, self.ny)
        y.flags.writeable = False
        return y

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite Simpson weights (sum to ``L``)."""
        w = simpson_weights(self.ny - 1, self.h)
        w.flags.writeable = False
        return w

    @cached_property
    def trapezoid(self) -> np.ndarray:
        w = np.full(self.ny, self.h)
        w[0] = w[-1] = self.h / 2
        w.flags.writeable = False
        return w

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Simpson integral over ``[0, L]`` along the last axis."""
        return np.asarray(f) @ self.weights

    def cumulative(self, f: np.ndarray) -> np.ndarray:
        """``int_0^{y_j} f`` at every node (complex input allowed)."""
        f = np.asarray(f)
        if np.iscomplexobj(f):
            return self.cumulative(f.real) + 1j * self.cumulative(f.imag)
        return cumulative_simpson(f, dx=self.h, initial=0.0)

    def cumulative_from_right(self, f: np.ndarray) -> np.ndarray:
        """``int_{y_j}^L f`` at every node."""
        return self.cumulative(np.asarray(f)[..., ::-1])[..., ::-1]

    def refine(self) -> "Grid1D":
        return Grid1D(2 * self.ny - 1, self.L)

    def check_same(self, other: "Grid1D"):
        if self.ny != other.ny or not math.isclose(self.L, other.L, rel_tol=1e-14):
            raise GridMismatchError(f"grids differ: {self} vs {other}")


def d1(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative along the last axis (one-sided at the ends)."""
    return np.gradient(f, h, axis=-1, edge_order=2)


def d2(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order second derivative along the last axis (one-sided at the ends)."""
    f = np.asarray(f)
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - 2 * f[..., 1:-1] + f[..., :-2]) / h**2
    out[..., 0] = (2 * f[..., 0] - 5 * f[..., 1] + 4 * f[..., 2] - f[..., 3]) / h**2
    out[..., -1] = (2 * f[..., -1] - 5 * f[..., -2] + 4 * f[..., -3] - f[..., -4]) / h**2
    return out
