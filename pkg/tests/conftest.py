import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from weilpoisson import build_algebra

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

MATRIX_SPECS = [
    "R[T1]/(T1^2)",
    "R[T1]/(T1^3)",
    "R[T1,T2]/(T1,T2)^2",
    "R[T1,T2]/(T1^2,T2^2)",
]


@pytest.fixture(params=MATRIX_SPECS)
def algebra(request):
    return build_algebra(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
