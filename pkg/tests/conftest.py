import numpy as np
import pytest

from rwz.codec import CodeSet, WzParams
from rwz.rbp import RbpConfig


@pytest.fixture(scope="session")
def toy_params():
    return WzParams.from_rate(0.28, 0.9531, a_eps=3.0, a_p=4.2, epsilon=0.005)


@pytest.fixture(scope="session")
def toy_codes(toy_params):
    return CodeSet.build(toy_params, 1000)


@pytest.fixture(scope="session")
def toy_stage1_cfg(toy_params):
    return RbpConfig(prior_var=0.185 * toy_params.rho2, gamma1=0.999,
                     max_iters=1500, restart_increment=1e-4, max_restarts=8)


@pytest.fixture(scope="session")
def toy_stage2_cfg(toy_params):
    return RbpConfig(prior_var=0.0712 * toy_params.rho2, gamma1=0.9995,
                     max_iters=2000, restart_increment=5e-5, max_restarts=8)


@pytest.fixture(scope="session")
def toy_noise_var(toy_params):
    return toy_params.rho2 * 0.070 + toy_params.alpha ** 2 * toy_params.p_v
