import numpy as np
import pytest

from lifinv.numgrid import RadialGrid
from lifinv.pipeline import extract
from lifinv.spectrum import apply_threshold, synthesize_spectrum
from lifinv.twin import build_twin

THRESHOLD = 0.025
N_LOWER = 31


@pytest.fixture(scope="session")
def grid():
    return RadialGrid()


@pytest.fixture(scope="session")
def twin():
    return build_twin()


@pytest.fixture(scope="session")
def full_spectrum(twin):
    return synthesize_spectrum(twin.ground, twin.excited, twin.mass, twin.bands, N_LOWER)


@pytest.fixture(scope="session")
def measured(full_spectrum):
    return apply_threshold(full_spectrum, THRESHOLD)


@pytest.fixture(scope="session")
def extraction(twin, measured):
    return extract(measured, twin.ground, twin.mass)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
