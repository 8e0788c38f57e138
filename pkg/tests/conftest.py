import os

import pytest
from hypothesis import HealthCheck, settings

from rainbow_qae.pricing import MarketModel

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def reference_market() -> MarketModel:
    return MarketModel(
        s0=(193.97, 189.12),
        mu_daily=(5.096e-4, 6.255e-4),
        covariance=((3.35e-4, 2.57e-4), (2.57e-4, 4.18e-4)),
        strike=190.0,
        horizon_days=250,
    )


@pytest.fixture(scope="session")
def single_market() -> MarketModel:
    return MarketModel((100.0,), (4.0e-4,), ((2.5e-4,),), 100.0, 250)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
