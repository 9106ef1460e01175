import numpy as np
import pytest

from christoffel_lsq import Algebraic, Geometric, ProblemModel, TensorProduct, UnivariateWeights


@pytest.fixture
def geo():
    return ProblemModel(Geometric(q=0.5), 1)


@pytest.fixture
def geo2():
    return ProblemModel(Geometric(q=0.5), 2)


@pytest.fixture
def alg():
    return ProblemModel(Algebraic(alpha=2.0), 1)


@pytest.fixture
def halving():
    # lambda_k = 2**-k, trace 1
    return ProblemModel(Geometric.from_ratio(0.5), 1)


@pytest.fixture
def tensor2():
    return ProblemModel(TensorProduct(UnivariateWeights("geometric", ratio=0.5)), 2)


def grid_points(N, d):
    """Uniform tensor grid; exact quadrature for trig polynomials of degree < N."""
    g = np.arange(N) / N
    mesh = np.meshgrid(*([g] * d), indexing="ij")
    return np.column_stack([a.ravel() for a in mesh])


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
