import numpy as np
import pytest

from zdlimit.datum import Rational, Step, mollify, sampled_from_function


def gaussian_datum(n=1601):
    return sampled_from_function(lambda y: np.exp(-y * y),
                                 lambda y: -2.0 * y * np.exp(-y * y), -8.0, 8.0, n)


@pytest.fixture(scope="session")
def gaussian():
    """exp(-y^2) sampled with derivatives on [-8, 8]."""
    return gaussian_datum()


@pytest.fixture(scope="session")
def lorentzian():
    """1/(1 + y^2) from its pole at i with residue -i/2."""
    return Rational(np.array([1j]), np.array([-0.5j]))


@pytest.fixture(scope="session")
def lorentzian3():
    return Rational(np.array([1j]), np.array([-1.5j]))


@pytest.fixture(scope="session")
def smooth_step():
    return mollify(Step(-1.0, 1.0, 1.0), 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
