import json
import pathlib

import pytest

from pricelab.distributions import assemble
from pricelab.forms import Constant, Exponential, Rational

FROZEN = json.loads((pathlib.Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def oracle():
    return FROZEN


@pytest.fixture
def f10():
    """1 - 1/(x+1) on [0, 1], atom 1/2 at 1."""
    return assemble("1 - 1/(x+1)", [(0.0, 1.0, Rational((0.0, 1.0), (1.0, 1.0)))])


@pytest.fixture
def exp04():
    return assemble("exp(0.4)", [(0.0, 1.0, Exponential(1.0, -1.0, -0.4))])


@pytest.fixture
def third():
    """0 up to 1/3, then 1 - 1/(3x)."""
    return assemble(
        "1 - 1/(3x)", [(0.0, 1 / 3, Constant(0.0)), (1 / 3, 1.0, Rational((-1.0, 3.0), (0.0, 3.0)))]
    )


@pytest.fixture
def counterexample():
    """Density 1.8 on [0, 0.5], 0.2 on (0.5, 1]: virtual value drops at 0.5."""
    return assemble(
        "two-piece density",
        [(0.0, 0.5, Rational((0.0, 1.8))), (0.5, 1.0, Rational((0.8, 0.2)))],
    )


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
