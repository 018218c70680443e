from fractions import Fraction

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def accept():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(name: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


H = Fraction(1, 2)
THIRD = Fraction(1, 3)

# lifted matrices of the two-agent, one-delay illustration
B1 = [[1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]]
B2 = [[H, 0, 0, H], [0, 1, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]]
B1B2 = [[H, 0, 0, H], [0, 1, 0, 0], [H, 0, 0, H], [0, 1, 0, 0]]
G1 = [[1, 0], [0, 1]]
G2 = [[H, H], [0, 1]]

# single-state, two-agent system with maximum delay 3
EX2_B = [
    [0, 0, THIRD, 0, 0, THIRD, 0, THIRD],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
]
EX2_PATTERN = [
    [1, 1, 0, 1, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 1, 1, 1, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [1, 1, 0, 1, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 1, 1, 1, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 0, 0, 0],
]


def f(m):
    return np.array([[float(x) for x in row] for row in m])
