import numpy as np
import pytest

from varcalc.geometry import build_chart, gauss_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def s2():
    return build_chart("hypersphere", 2)


@pytest.fixture(scope="session")
def s3():
    return build_chart("hypersphere", 3)


@pytest.fixture(scope="session")
def box2():
    return build_chart("flat_box", 2)


@pytest.fixture(scope="session")
def annulus():
    return build_chart("annulus", 2)


@pytest.fixture(scope="session")
def s2_grid(s2):
    return gauss_grid(s2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(ACCEPTANCE_LINES), key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
