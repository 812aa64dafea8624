"""
Shared fixtures
"""

import pytest

from app.core.logging import configure_logging
from app.services.operator import OperatorParams
from app.services.special import WeightExponents

configure_logging("WARNING")


@pytest.fixture
def symmetric_params():
    return OperatorParams.from_alpha_theta(1.6, 0.5, 1.0)


@pytest.fixture
def skewed_params():
    return OperatorParams.from_alpha_theta(1.4, 0.7, 1.0)


@pytest.fixture
def left_params():
    return OperatorParams.from_alpha_theta(1.5, 1.0, 1.0)


@pytest.fixture(params=[(0.0, 0.0), (0.8, 0.8), (0.8602, 0.5398)])
def weight(request):
    return WeightExponents(*request.param)
