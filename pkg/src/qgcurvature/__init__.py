"""Curvature of the quasi-geostrophic configuration space at channel shear flows.

Modules
-------
grid, field
    Channel discretisation and mixed Fourier/finite-difference fields.
flows
    Steady shear flows given by formulas or samples.
greens, algebra
    Helmholtz Green's functions and the centrally extended Lie algebra.
curvature
    Per-mode sectional curvature ``K_n`` by independent routes.
criterion
    The sign criterion for ``K_n`` with its oracle and witness search.
simulate
    Pseudo-spectral time integration of the channel equations.
cli
    The ``qgcurv`` command.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DegeneratePlaneError, GridMismatchError,
                     SimulationBlowupError)
from .grid import Grid1D, Params
from .field import Field2D
from .flows import ShearFlow
from .algebra import AlgebraElement, ad, coad, metric_inner, metric_norm, mode_element, shear_element
from .curvature import (CurvatureReport, ModeCurvature, ModeProfile, curvature_arnold,
                        curvature_two_term, deformation_D, kn_direct_fd, kn_green, kn_integral, normalized_sectional,
                        total_curvature)
from .criterion import (CriticalFamily, check_theorem, corollary_check, criterion_report,
                        critical_family, definiteness_for, ratio_R, witness_for)
from .simulate import QGState, RunConfig, evolve, spreading_experiment

__all__ = [
    "ConfigError", "ConvergenceError", "DegeneratePlaneError", "GridMismatchError",
    "SimulationBlowupError", "Grid1D", "Params", "Field2D", "ShearFlow", "AlgebraElement", "ad",
    "coad", "metric_inner", "metric_norm", "mode_element", "shear_element", "CurvatureReport",
    "ModeCurvature", "ModeProfile", "curvature_arnold", "curvature_two_term", "deformation_D", "kn_direct_fd",
    "kn_green", "kn_integral", "normalized_sectional", "total_curvature", "CriticalFamily",
    "check_theorem", "corollary_check", "criterion_report", "critical_family", "definiteness_for",
    "ratio_R", "witness_for", "QGState", "RunConfig", "evolve", "spreading_experiment",
]
