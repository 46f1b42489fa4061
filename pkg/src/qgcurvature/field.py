"""Functions on the cylinder ``N = S^1 x [0, L]``.

A :class:`Field2D` stores a truncated Fourier series in ``x`` whose
coefficients are profiles sampled on a :class:`~qgcurvature.grid.Grid1D`::

    f(x, y) = sum_{|n| <= nmax} f_n(y) exp(i n x)

x-derivatives are exact, y-derivatives are second-order finite differences,
and products are evaluated on a zero-padded x-grid (at least ``3 nmax + 1``
points) so the truncated result carries no aliasing error.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.fft import next_fast_len

from .errors import GridMismatchError
from .grid import Grid1D, d1, d2


class Field2D:
    """Truncated Fourier-in-x, sampled-in-y function on the cylinder.

    Parameters
    ----------
    coeffs : array_like, shape (2 * nmax + 1, ny)
        Row ``n + nmax`` holds the profile ``f_n(y)``.
    L : float
        Channel width.
    real : bool
        Whether the field is real-valued, i.e. ``f_{-n} = conj(f_n)``.
        Checked on construction.
    """

    __slots__ = ("_c", "grid", "real")

    def __init__(self, coeffs, L: float, real: bool = True, *, _trusted: bool = False):
        c = np.array(coeffs, dtype=complex, copy=True)
        if c.ndim != 2 or c.shape[0] % 2 != 1:
            raise ValueError("coeffs must have shape (2*nmax+1, ny)")
        self.grid = Grid1D(c.shape[1], float(L))
        self.real = bool(real)
        if self.real:
            mirror = np.conj(c[::-1])
            if not _trusted:
                scale = max(np.abs(c).max(), 1.0)
                if np.abs(c - mirror).max() > 1e-12 * scale:
                    raise ValueError("real field requires f_{-n} = conj(f_n)")
            c = 0.5 * (c + mirror)
        c.flags.writeable = False
        self._c = c

    # -- construction ---------------------------------------------------------

    @classmethod
    def zeros(cls, nmax: int, grid: Grid1D) -> "Field2D":
        return cls(np.zeros((2 * nmax + 1, grid.ny)), grid.L, _trusted=True)

    @classmethod
    def from_modes(cls, modes: dict, nmax: int, grid: Grid1D, real: bool = True) -> "Field2D":
        """Build a field from ``{n: profile}``.

        With ``real=True`` only one of ``n`` / ``-n`` needs to be given; the
        conjugate partner is filled in.
        """
        c = np.zeros((2 * nmax + 1, grid.ny), dtype=complex)
        for n, prof in modes.items():
            if abs(n) > nmax:
                raise ValueError(f"mode {n} exceeds nmax={nmax}")
            prof = np.asarray(prof, dtype=complex)
            if prof.shape != (grid.ny,):
                raise GridMismatchError(f"profile for mode {n} has shape {prof.shape}")
            c[n + nmax] = prof
            if real and n != 0 and (-n) not in modes:
                c[-n + nmax] = np.conj(prof)
        if real:
            c[nmax] = c[nmax].real
        return cls(c, grid.L, real=real)

    @classmethod
    def shear(cls, profile, nmax: int, grid: Grid1D) -> "Field2D":
        """A function of ``y`` only."""
        return cls.from_modes({0: np.asarray(profile, dtype=float)}, nmax, grid)

    @classmethod
    def from_function(cls, func, nmax: int, grid: Grid1D, real: bool = True) -> "Field2D":
        """Project ``func(x, y)`` (vectorised) onto modes ``|n| <= nmax``."""
        M = next_fast_len(4 * nmax + 4)
        x = 2 * np.pi * np.arange(M) / M
        vals = np.asarray(func(x[:, None], grid.y[None, :]), dtype=complex)
        vals = np.broadcast_to(vals, (M, grid.ny))
        full = np.fft.fft(vals, axis=0) / M
        idx = np.arange(-nmax, nmax + 1) % M
        c = full[idx]
        if real:
            c = 0.5 * (c + np.conj(c[::-1]))
        return cls(c, grid.L, real=real, _trusted=True)

    def _new(self, c, real=None) -> "Field2D":
        return Field2D(c, self.grid.L, self.real if real is None else real, _trusted=True)

    # -- shape ----------------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def nmax(self) -> int:
        return (self._c.shape[0] - 1) // 2

    @property
    def ny(self) -> int:
        return self._c.shape[1]

    @property
    def ns(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def mode(self, n: int) -> np.ndarray:
        if abs(n) > self.nmax:
            return np.zeros(self.ny, dtype=complex)
        return self._c[n + self.nmax]

    def check_compatible(self, other: "Field2D"):
        self.grid.check_same(other.grid)
        if self.nmax != other.nmax:
            raise GridMismatchError(f"nmax differs: {self.nmax} vs {other.nmax}")

    # -- linear algebra -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Field2D):
            self.check_compatible(other)
            return self._new(self._c + other._c, self.real and other.real)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Field2D):
            self.check_compatible(other)
            return self._new(self._c - other._c, self.real and other.real)
        return NotImplemented

    def __neg__(self):
        return self._new(-self._c)

    def __mul__(self, s):
        if isinstance(s, Field2D):
            return self.product(s)
        if np.iscomplexobj(s) and np.imag(s) != 0:
            return self._new(self._c * s, real=False)
        return self._new(self._c * float(np.real(s)))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    # -- calculus -------------------------------------------------------------

    def dx(self) -> "Field2D":
        return self._new(1j * self.ns[:, None] * self._c)

    def dy(self) -> "Field2D":
        return self._new(d1(self._c, self.grid.h))

    def dyy(self) -> "Field2D":
        return self._new(d2(self._c, self.grid.h))

    def laplacian(self) -> "Field2D":
        return self._new(d2(self._c, self.grid.h) - (self.ns ** 2)[:, None] * self._c)

    def product(self, other: "Field2D") -> "Field2D":
        """Pointwise product truncated to ``|n| <= nmax`` (alias free)."""
        self.check_compatible(other)
        M = next_fast_len(3 * self.nmax + 1)
        idx = self.ns % M
        a = np.zeros((M, self.ny), dtype=complex)
        b = np.zeros((M, self.ny), dtype=complex)
        a[idx] = self._c
        b[idx] = other._c
        prod = np.fft.ifft(a, axis=0) * np.fft.ifft(b, axis=0) * M
        return self._new(np.fft.fft(prod, axis=0)[idx], self.real and other.real)

    def integral(self) -> float:
        """``int_N f dnu`` with Simpson in ``y``."""
        return 2 * np.pi * self.grid.integrate(self.mode(0)).real

    # -- inspection -----------------------------------------------------------

    def to_physical(self, nx: int) -> tuple[np.ndarray, np.ndarray]:
        """Values on ``x_k = 2 pi k / nx``; returns ``(x, values[nx, ny])``."""
        if nx < 2 * self.nmax + 1:
            raise ValueError("nx too small to represent the field")
        x = 2 * np.pi * np.arange(nx) / nx
        full = np.zeros((nx, self.ny), dtype=complex)
        full[self.ns % nx] = self._c
        vals = np.fft.ifft(full, axis=0) * nx
        return x, (vals.real if self.real else vals)

    def boundary_residual(self) -> float:
        """Largest ``|f_n(0)|, |f_n(L)|`` over ``n != 0``."""
        nz = self.ns != 0
        if not nz.any():
            return 0.0
        return float(np.abs(self._c[nz][:, [0, -1]]).max())

    def sup_norm(self) -> float:
        return float(np.abs(self._c).sum(axis=0).max())

    def max_abs_coeff(self) -> float:
        return float(np.abs(self._c).max())

    def allclose(self, other: "Field2D", atol: float) -> bool:
        self.check_compatible(other)
        return bool(np.abs(self._c - other._c).max() <= atol)

    def __repr__(self):
        return f"Field2D(nmax={self.nmax}, ny={self.ny}, L={self.grid.L}, real={self.real})"

    # -- serialisation --------------------------------------------------------

    def to_dict(self) -> dict:
        inter = np.empty(self._c.shape + (2,))
        inter[..., 0] = self._c.real
        inter[..., 1] = self._c.imag
        return {
            "nmax": self.nmax,
            "ny": self.ny,
            "L": self.grid.L,
            "real": self.real,
            "modes": inter.reshape(self._c.shape[0], -1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Field2D":
        nmax, ny = int(d["nmax"]), int(d["ny"])
        arr = np.asarray(d["modes"], dtype=float)
        if arr.shape != (2 * nmax + 1, 2 * ny):
            raise ValueError(f"modes array has shape {arr.shape}, expected {(2 * nmax + 1, 2 * ny)}")
        c = arr[:, 0::2] + 1j * arr[:, 1::2]
        return cls(c, float(d["L"]), real=bool(d.get("real", True)))

    @classmethod
    def from_json(cls, s: str) -> "Field2D":
        return cls.from_dict(json.loads(s))


def y_field(nmax: int, grid: Grid1D) -> Field2D:
    """The coordinate function ``chi(x, y) = y``."""
    return Field2D.shear(grid.y, nmax, grid)

