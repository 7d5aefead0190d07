import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from misdid.core import LatentPanel

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_latent(rng: np.random.Generator, n: int, p: float = 0.5, eps_p=(0.2, 0.2)) -> LatentPanel:
    """Arbitrary latent panel (no parallel-trends structure) with both arms populated."""
    while True:
        d_star = (rng.random(n) < p).astype(int)
        eps = (rng.random(n) < np.where(d_star == 1, eps_p[0], eps_p[1])).astype(int)
        d = d_star ^ eps
        if 0 < d_star.sum() < n and 0 < d.sum() < n and ((d_star == 1) & (eps == 0)).any():
            break
    return LatentPanel(rng.normal(size=n), rng.normal(1, 2, size=n), rng.normal(3, 2, size=n), d_star, eps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for a criterion; returns the verdict so the test can assert it."""
    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  [{number:>2}] {name}: {detail}")
        return passed
    return record
