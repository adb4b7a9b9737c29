import numpy as np
import pytest

from bincalib import (BenchScenario, ComputerDataset, PhysicalDataset,
                      generate_computer, generate_physical)

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def study41_data():
    """One fixed Study41 replicate: physical (n=50) and computer (N=400)."""
    sc = BenchScenario.study41()
    return generate_physical(sc, 12345), generate_computer(sc, 12345)


@pytest.fixture(scope="session")
def small_physical():
    """Tiny smooth physical dataset for fast classifier tests."""
    rng = np.random.default_rng(7)
    x = np.linspace(0.0, 1.0, 40)[:, None]
    probs = 0.2 + 0.6 * x[:, 0]
    y = (rng.uniform(size=40) < probs).astype(float)
    from bincalib import unit_domain
    return PhysicalDataset(x, y, unit_domain(1))


@pytest.fixture(scope="session")
def small_computer():
    """Tiny computer dataset over (x, theta) with a monotone surface."""
    rng = np.random.default_rng(11)
    x = rng.uniform(size=(80, 1))
    theta = rng.uniform(size=(80, 1))
    probs = 0.2 + 0.4 * x[:, 0] + 0.3 * theta[:, 0]
    y = (rng.uniform(size=80) < probs).astype(float)
    from bincalib import unit_domain
    return ComputerDataset(x, theta, y, unit_domain(1), unit_domain(1))
