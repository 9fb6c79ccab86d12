import numpy as np
import pytest

from orbit_thermo.algebra import build_mot2, build_osc, build_sl2, build_so12, build_su2, build_heis, build_hsp
from orbit_thermo.config import get_settings
from orbit_thermo.roots import root_decomposition, weyl_group


@pytest.fixture
def settings():
    return get_settings()


@pytest.fixture
def sl2():
    return build_sl2()


@pytest.fixture
def so12():
    return build_so12()


@pytest.fixture
def su2():
    return build_su2()


@pytest.fixture
def osc():
    return build_osc()


@pytest.fixture
def hsp1():
    return build_hsp(1)


@pytest.fixture
def heis3():
    return build_heis(1)


@pytest.fixture
def mot2():
    return build_mot2()


@pytest.fixture
def sl2_datum(sl2):
    datum = root_decomposition(sl2)
    return datum, weyl_group(datum)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
