import numpy as np
import pytest

from dprdensity.baseline import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def wide_grid():
    return Grid(-10.0, 10.0, 10_000)


@pytest.fixture
def coarse_grid():
    return Grid(-10.0, 10.0, 2001)


_ACCEPTANCE_LINES: list[str] = []


class AcceptanceRecorder:
    def __init__(self, capsys):
        self._capsys = capsys

    def __call__(self, criterion: int, passed: bool, detail: str) -> None:
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        with self._capsys.disabled():
            print(f"\n{line}")


@pytest.fixture
def acceptance(capsys):
    return AcceptanceRecorder(capsys)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
