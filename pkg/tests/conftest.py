import numpy as np
import pytest

from multipoint_pt.bench import ExperimentConfig, SchrodingerModel

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def config():
    return ExperimentConfig.load()


@pytest.fixture(scope="session")
def model(config):
    return SchrodingerModel(config)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
