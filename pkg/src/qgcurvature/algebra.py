"""Lie algebra of the centrally extended quantomorphism group of
``M = S^1 x [0, L] x S^1`` with contact form ``theta = dz - y dx``.

Algebra elements are pairs ``(psi, c)`` of a stream function on the
cylinder and a real central charge.  Conventions used throughout:

* Poisson bracket ``{a, b} = a_x b_y - a_y b_x``;
* ``ad_X Y = -({psi, g}, b(psi, g))`` with cocycle ``b(psi, g) = int_N y {psi, g}``;
* ``coad`` is the exact metric adjoint of ``ad``, so
  ``<<coad(X, Y), Z>> = <<Y, ad(X, Z)>>``.  Its stream part is
  ``Lambda^{-1}(alpha^2 {psi, g} - {psi, Lap g} + gamma {psi, y})`` where
  ``gamma`` is the charge of ``Y``;
* with these signs the Euler-Arnold equation ``X_t = -coad(X, X)`` of
  ``X = (psi, c)`` is the QG equation with ``omega = Lap psi - alpha^2 psi - c y``,
  so a flow on the beta-plane is the element ``(psi, -beta)``
  (see :func:`shear_element`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import Field2D, y_field
from .flows import ShearFlow
from .greens import dirichlet_helmholtz
from .grid import Grid1D, Params


@dataclass(frozen=True)
class AlgebraElement:
    stream: Field2D
    charge: float = 0.0

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.stream + other.stream, self.charge + other.charge)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.stream - other.stream, self.charge - other.charge)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.stream, -self.charge)

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.stream * s, self.charge * s)

    __rmul__ = __mul__

    @property
    def grid(self) -> Grid1D:
        return self.stream.grid

    @property
    def nmax(self) -> int:
        return self.stream.nmax


def shear_element(flow: ShearFlow, params: Params, grid: Grid1D, nmax: int) -> AlgebraElement:
    """Algebra element of the steady shear ``psi(y)`` on the beta-plane."""
    return AlgebraElement(Field2D.shear(flow(grid.y), nmax, grid), -params.beta)


def mode_element(n: int, profile, nmax: int, grid: Grid1D, charge: float = 0.0) -> AlgebraElement:
    """Real element ``g(y) e^{inx} + conj(g(y)) e^{-inx}``."""
    return AlgebraElement(Field2D.from_modes({n: profile}, nmax, grid), charge)


def poisson_bracket(a: Field2D, b: Field2D) -> Field2D:
    a.check_compatible(b)
    return a.dx().product(b.dy()) - a.dy().product(b.dx())


def apply_Lambda(f: Field2D, params: Params) -> Field2D:
    """``alpha^2 f - Lap f``."""
    return f * params.alpha2 - f.laplacian()


def invert_Lambda(f: Field2D, params: Params) -> Field2D:
    """Mode-wise Dirichlet solve of ``(alpha^2 + n^2) u - u'' = f_n``.

    Every mode, including ``n = 0``, takes ``u(0) = u(L) = 0``; the boundary
    samples of ``f`` are not used.
    """
    lam2 = params.alpha2 + f.ns.astype(float) ** 2
    u = dirichlet_helmholtz(lam2, f.coeffs, f.grid.h)
    return Field2D(u, f.grid.L, f.real, _trusted=True)


def cocycle_b(psi: Field2D, g: Field2D) -> float:
    """``int_N y {psi, g} dnu``."""
    br = poisson_bracket(psi, g)
    return float(2 * np.pi * psi.grid.integrate(psi.grid.y * br.mode(0)).real)


def ad(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    br = poisson_bracket(X.stream, Y.stream)
    b = float(2 * np.pi * br.grid.integrate(br.grid.y * br.mode(0)).real)
    return AlgebraElement(-br, -b)


def coad(X: AlgebraElement, Y: AlgebraElement, params: Params) -> AlgebraElement:
    psi, g = X.stream, Y.stream
    rhs = (poisson_bracket(psi, g) * params.alpha2
           - poisson_bracket(psi, g.laplacian())
           + poisson_bracket(psi, y_field(psi.nmax, psi.grid)) * Y.charge)
    return AlgebraElement(invert_Lambda(rhs, params), 0.0)


def metric_inner(X: AlgebraElement, Y: AlgebraElement, params: Params) -> float:
    """``int_N (alpha^2 psi g + grad psi . grad g) dnu + c_X c_Y``.

    Discretised in summation-by-parts form: the ``alpha^2 + n^2`` part with
    the trapezoid rule and the ``psi_y g_y`` part with forward differences on
    each cell.  For fields vanishing at the walls this equals
    ``int psi Lambda_h g`` exactly, with ``Lambda_h`` the three-point operator
    used by :func:`invert_Lambda`.
    """
    a, b = X.stream.coeffs, Y.stream.coeffs
    X.stream.check_compatible(Y.stream)
    grid = X.grid
    ns2 = X.stream.ns.astype(float) ** 2
    prod = np.conj(a) * b
    vals = (params.alpha2 + ns2)[:, None] * prod
    da = np.diff(a, axis=1) / grid.h
    db = np.diff(b, axis=1) / grid.h
    total = (vals @ grid.trapezoid).sum() + grid.h * (np.conj(da) * db).sum()
    return float(2 * np.pi * total.real + X.charge * Y.charge)


def metric_norm(X: AlgebraElement, params: Params) -> float:
    return float(np.sqrt(max(metric_inner(X, X, params), 0.0)))


def contact_lift(psi: Field2D) -> tuple[Field2D, Field2D, Field2D]:
    """Components ``(X^x, X^y, X^z)`` of the contact vector field of ``psi``.

    ``X = -psi_y d_x + psi_x d_y + (psi - y psi_y) d_z``, the unique
    field with ``theta(X) = psi`` and ``i_X d theta + d psi = 0``.
    """
    py = psi.dy()
    yf = y_field(psi.nmax, psi.grid)
    return -py, psi.dx(), psi - yf.product(py)


def contact_form(lift: tuple[Field2D, Field2D, Field2D]) -> Field2D:
    """``theta(X) = X^z - y X^x``."""
    xx, _, xz = lift
    return xz - y_field(xx.nmax, xx.grid).product(xx)


def lift_commutator(A: tuple, B: tuple) -> tuple:
    """Vector-field commutator ``[A, B]^i = A . grad B^i - B . grad A^i``
    of z-independent fields."""
    out = []
    for i in range(3):
        term = A[0].product(B[i].dx()) + A[1].product(B[i].dy())
        term = term - B[0].product(A[i].dx()) - B[1].product(A[i].dy())
        out.append(term)
    return tuple(out)


def steady_residual_field(psi: Field2D, params: Params) -> float:
    """Sup-norm of ``{psi, omega}`` with ``omega = Lap psi - alpha^2 psi + beta y``."""
    omega = psi.laplacian() - psi * params.alpha2 + y_field(psi.nmax, psi.grid) * params.beta
    return poisson_bracket(psi, omega).sup_norm()


def steady_residual(flow: ShearFlow, params: Params, grid: Grid1D | None = None, nmax: int = 4) -> float:
    grid = grid or Grid1D(129, params.L)
    return steady_residual_field(Field2D.shear(flow(grid.y), nmax, grid), params)
