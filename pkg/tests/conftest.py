import numpy as np
import pytest

from varjacobi.polynomial import MatrixPolynomial
from varjacobi.problem import ScalarProblem1D, VariationalProblem


def const(x) -> MatrixPolynomial:
    return MatrixPolynomial.constant(np.atleast_2d(np.asarray(x, dtype=float)))


@pytest.fixture
def harmonic():
    """``int h'^2 - h^2`` on ``[0, b]``: conjugate points at multiples of pi."""
    def make(b=1.0, a=0.0):
        return VariationalProblem(1, 1, (a, b), (const(-2.0), const(2.0)), (const(0.0),))
    return make


@pytest.fixture
def unit_harmonic():
    """``1/2 int h'^2 - h^2``: ``H = [[0, 1], [-1, 0]]`` and ``W = sin``."""
    def make(b=1.0, a=0.0):
        return VariationalProblem(1, 1, (a, b), (const(-1.0), const(1.0)), (const(0.0),))
    return make


@pytest.fixture
def bilaplacian():
    """``int h''^2`` on ``[0, 1]`` with ``M_22 = 2``."""
    return VariationalProblem(2, 1, (0.0, 1.0), (const(0.0), const(0.0), const(2.0)), (const(0.0), const(0.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        try:
            from test_acceptance import RESULTS
        except ImportError:
            return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
