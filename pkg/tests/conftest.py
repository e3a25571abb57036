import numpy as np
import pytest

from nvmag.spinmodel import SpinModelParams

# literature rates (MHz), T1 = 5.5 ms, T2* = 0.4 us
RATES = dict(k_r=65.9, k_isc0=11.0, k_isc1=79.8, k_s0=0.98, k_s1=1.46)


@pytest.fixture
def params():
    return SpinModelParams(**RATES, t1_spin=5.5, t2_star=0.4)


@pytest.fixture
def toy_params():
    # round numbers, deliberately unlike the literature set
    return SpinModelParams(k_r=50.0, k_isc0=5.0, k_isc1=40.0, k_s0=2.0, k_s1=1.0, t1_spin=1.0, t2_star=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
