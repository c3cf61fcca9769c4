import numpy as np
import pytest

from peakshift import SimulationParams, simulate

SMALL = dict(school_count=40, students_per_school=50, university_count=12, entrants_per_university=150)

ACCEPTANCE_LINES: list[str] = []


def small_params(seed: int = 0, **overrides) -> SimulationParams:
    return SimulationParams(**{**SMALL, **overrides}, rng_seed=seed)


@pytest.fixture(scope="session")
def small_sim():
    return simulate(small_params(7))


@pytest.fixture(scope="session")
def small_dataset(small_sim):
    dataset, dropped = small_sim.to_dataset()
    assert not dropped
    return dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
