import numpy as np
import pytest

from hdgc.varsim import build_dgp, simulate_var, toeplitz_sigma


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dgp1_panel():
    def make(K=10, T=200, hypothesis="null", rho=0.0, seed=0):
        return simulate_var(build_dgp(1, K, hypothesis), toeplitz_sigma(K, rho), T, 50, seed)
    return make


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(criterion, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
