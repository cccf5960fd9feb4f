import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hcizflow.eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge
from hcizflow.measures import Grid, from_function, semicircle

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

QUARTIC = [0.0, 0.0, 0.5, 0.0, 0.1]


def bump_density(x, center=0.0, width=1.0, skew=0.0):
    s = (x - center) / width
    return np.clip(1 - s * s, 0.0, None) ** 2 * (1 + skew * s)


@pytest.fixture(scope="session")
def unit_semicircle():
    return semicircle(1.0, n=1601)


@pytest.fixture(scope="session")
def smooth_bump():
    return from_function(lambda x: bump_density(x, 0.2, 1.3, 0.4), Grid.uniform(-1.5, 1.7, 641))


@pytest.fixture(scope="session")
def sc_bridge_coarse():
    mu = semicircle(1.0)
    return solve_bridge(mu, mu, 2.0, SpaceTimeGrid(-3.5, 3.5, 64, 32), BridgeOptions(tol=1e-5))


@pytest.fixture(scope="session")
def sc_bridge_fine():
    mu = semicircle(1.0)
    return solve_bridge(mu, mu, 2.0, SpaceTimeGrid(-3.5, 3.5, 128, 64), BridgeOptions(tol=1e-5))


@pytest.fixture(scope="session")
def asym_bridge():
    mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
    return solve_bridge(mu0, mu1, 2.0, SpaceTimeGrid(-3.5, 3.8, 64, 32), BridgeOptions(tol=1e-5))
