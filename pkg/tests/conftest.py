import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gaussfid.core import CovarianceMatrix, GainMatrix, GaussianChannel, Quadratures

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def pi_rotation():
    return GaussianChannel(GainMatrix.diagonal(-1.0, -1.0), Quadratures(), CovarianceMatrix.zero())


@pytest.fixture
def identity():
    return GaussianChannel.identity()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
