import numpy as np
import pytest

from qgcurvature.criterion import ratio_R
from qgcurvature.flows import ShearFlow
from qgcurvature.grid import Grid1D, Params

# criterion lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def random_poly_flow(rng, degree=4):
    c = rng.normal(size=degree + 1) * np.array([1.0, 1.0, 1.0, 0.5, 0.3, 0.2, 0.1][:degree + 1])
    c[0] = 0.0
    return ShearFlow.polynomial(c)


def random_profile(rng, grid, kmax=5):
    y = grid.y / grid.L
    g = np.zeros(grid.ny, dtype=complex)
    for k in range(1, kmax + 1):
        g += (rng.normal() + 1j * rng.normal()) / k**2 * np.sin(k * np.pi * y)
    return g


def zero_free_cases(rng, count, modes=(1, 2, 3), grid=None, alpha2s=(0.25, 1.0, 4.0),
                    betas=(0.0, 1.0), max_tries=5000):
    """``(flow, params, n)`` triples whose eta and xi have no interior zeros."""
    grid = grid or Grid1D(513)
    out = []
    for _ in range(max_tries):
        if len(out) == count:
            break
        flow = random_poly_flow(rng)
        params = Params(1.0, float(rng.choice(alpha2s)), float(rng.choice(betas)))
        n = int(rng.choice(modes))
        prof = ratio_R(flow, params, n, grid)
        if prof.valid and not prof.zeros:
            out.append((flow, params, n))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def grid513():
    return Grid1D(513)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
