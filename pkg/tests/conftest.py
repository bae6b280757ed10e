import math

import pytest

from qisac import ChannelParams


@pytest.fixture
def params_common() -> ChannelParams:
    """The operating point used throughout: E=10, eta=0.8, Na=3 (A=4, sigma2=3.5)."""
    return ChannelParams(E=10.0, eta=0.8, Na=3.0, theta=math.radians(45.0))


@pytest.fixture
def params_theta0() -> ChannelParams:
    return ChannelParams(E=10.0, eta=0.8, Na=3.0, theta=0.0)
