import numpy as np
import pytest

from mimo_isac import SystemConfig, build_correlation_from_eigenvalues

BASE_LAMBDAS = (1.0, 0.1, 0.05, 0.01)

# lines appended by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def base_cfg(snr_db: float = 10.0, R0: float = 2.0) -> SystemConfig:
    return SystemConfig(M=4, N=5, K=4, L=30, p=10 ** (snr_db / 10), R0=R0)


@pytest.fixture(scope="session")
def base_corr():
    return build_correlation_from_eigenvalues(BASE_LAMBDAS, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
