import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mdz import FiniteMetricSpace

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def two_point(gap: float) -> FiniteMetricSpace:
    return FiniteMetricSpace(np.array([[0.0, gap], [gap, 0.0]]))


def line(*xs) -> FiniteMetricSpace:
    x = np.asarray(xs, dtype=float)
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"criterion {criterion:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
