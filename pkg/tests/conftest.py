import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from fairagg.core import OutcomeDistribution, OutcomeSpace  # noqa: E402

DATA = Path(__file__).parent / "data"

BINARY = OutcomeSpace((0, 1))
TERNARY = OutcomeSpace(("a", "b", "c"))


@pytest.fixture
def fixture_csv() -> Path:
    return DATA / "compas_fixture.csv"


@st.composite
def distributions(draw, space=BINARY, min_prob=0.0):
    """Random OutcomeDistribution over ``space`` built from integer weights."""
    n = len(space)
    raw = draw(st.lists(st.integers(0, 1000), min_size=n, max_size=n).filter(lambda xs: sum(xs) > 0))
    total = sum(raw)
    probs = [x / total for x in raw]
    if min_prob > 0.0:
        probs = [min_prob + (1 - n * min_prob) * p for p in probs]
    # renormalize the last coordinate so the sum is exactly 1 to float precision
    probs[-1] = max(0.0, 1.0 - sum(probs[:-1]))
    return OutcomeDistribution(space, tuple(probs))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
