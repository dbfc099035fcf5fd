import numpy as np
import pytest

from crossed_products.coefficients.block_algebra import AlgebraSpec
from crossed_products.groups.discrete_groups import make_group
from crossed_products.ideals.invariant_ideals import psl_preset
from crossed_products.systems.twisted_system import theta_system, trivial_system


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def z_group():
    return make_group("Z^d", d=1)


@pytest.fixture
def scalar_z(z_group):
    """C*_r(ℤ), the untwisted scalar system on the integers."""
    return trivial_system(z_group)


@pytest.fixture
def nc_torus():
    """ℤ² twisted by θ = 1/5: the noncommutative torus."""
    return theta_system(make_group("Z^d", d=2), "1/5")


@pytest.fixture
def twisted_z12():
    return theta_system(make_group("finite-cyclic", n=12), "1/12")


@pytest.fixture
def c2_trivial():
    return trivial_system(make_group("finite-cyclic", n=3), AlgebraSpec((1, 1)))


@pytest.fixture(scope="session")
def sl2z_model():
    return psl_preset()
