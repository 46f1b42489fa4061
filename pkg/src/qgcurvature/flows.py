"""Steady shear flows ``psi(y)`` with analytic derivative access.

The curvature criterion involves ``p''`` (i.e. ``psi'''``), which numerical
differentiation of sampled data would amplify; each family therefore
provides its derivatives directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import make_interp_spline

from .grid import Params

MAX_DERIVATIVE = 3


@dataclass(frozen=True)
class ShearFlow:
    """A stream function depending on ``y`` only.

    Use the constructors :meth:`polynomial`, :meth:`sampled` or
    :func:`qgcurvature.criterion.critical_family` rather than building the
    evaluators by hand.
    """

    family: str
    parameters: dict
    _derivs: tuple = field(repr=False, compare=False)

    def derivative(self, y, k: int = 0) -> np.ndarray:
        """``psi^{(k)}(y)`` for ``0 <= k <= 3``."""
        if not 0 <= k <= MAX_DERIVATIVE:
            raise ValueError(f"derivative order {k} not available")
        return np.asarray(self._derivs[k](np.asarray(y, dtype=float)), dtype=float)

    def __call__(self, y) -> np.ndarray:
        return self.derivative(y, 0)

    def p(self, y, params: Params) -> np.ndarray:
        """``alpha^2 psi'(y) - beta``."""
        return params.alpha2 * self.derivative(y, 1) - params.beta

    def dp(self, y, params: Params) -> np.ndarray:
        return params.alpha2 * self.derivative(y, 2)

    def ddp(self, y, params: Params) -> np.ndarray:
        return params.alpha2 * self.derivative(y, 3)

    def q(self, y) -> np.ndarray:
        """``psi''(y)``."""
        return self.derivative(y, 2)

    def dq(self, y) -> np.ndarray:
        return self.derivative(y, 3)

    def scaled(self, c: float) -> "ShearFlow":
        """The flow ``c * psi``."""
        return ShearFlow(
            self.family + "*scaled",
            {**self.parameters, "scale": c * self.parameters.get("scale", 1.0)},
            tuple((lambda y, f=f: c * f(y)) for f in self._derivs),
        )

    def describe(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in self.parameters.items())
        return f"{self.family}({args})"

    # -- families -------------------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs) -> "ShearFlow":
        """``psi(y) = sum_i coeffs[i] y^i``."""
        coeffs = [float(c) for c in coeffs]
        if not coeffs or not np.all(np.isfinite(coeffs)):
            raise ValueError("polynomial flow needs finite coefficients")
        P = Polynomial(coeffs)
        derivs = tuple(P.deriv(k) if k else P for k in range(MAX_DERIVATIVE + 1))
        return cls("polynomial", {"coeffs": coeffs}, derivs)

    @classmethod
    def sampled(cls, y, psi) -> "ShearFlow":
        """Quintic interpolating spline through samples (C^4, so ``psi'''`` is smooth)."""
        y = np.asarray(y, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if y.ndim != 1 or y.shape != psi.shape or y.size < 6:
            raise ValueError("sampled flow needs at least 6 matching samples")
        if np.any(np.diff(y) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        spl = make_interp_spline(y, psi, k=5)
        derivs = tuple(spl.derivative(k) if k else spl for k in range(MAX_DERIVATIVE + 1))
        return cls("sampled-spline", {"n_samples": int(y.size)}, derivs)

    @classmethod
    def from_callables(cls, family: str, parameters: dict, derivs) -> "ShearFlow":
        derivs = tuple(derivs)
        if len(derivs) != MAX_DERIVATIVE + 1:
            raise ValueError("need psi and its first three derivatives")
        return cls(family, dict(parameters), derivs)
