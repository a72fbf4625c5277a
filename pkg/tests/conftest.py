from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from stlccheck import fixtures
from stlccheck.liealg import VectorField
from stlccheck.polycore import MultiPoly

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

small_fractions = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


def polys(nvars: int, max_degree: int = 3, max_terms: int = 4):
    exps = st.tuples(*[st.integers(0, max_degree) for _ in range(nvars)]).filter(lambda e: sum(e) <= max_degree)
    return st.dictionaries(exps, small_fractions, max_size=max_terms).map(lambda d: MultiPoly(nvars, d))


def fields(n: int, max_degree: int = 3, max_terms: int = 3):
    return st.lists(polys(n, max_degree, max_terms), min_size=n, max_size=n).map(VectorField)


@pytest.fixture(scope="session")
def example0():
    return fixtures.load("example0")


@pytest.fixture(scope="session")
def sussmann_cubic():
    return fixtures.load("sussmann_cubic")


@pytest.fixture(scope="session")
def double_integrator():
    return fixtures.load("double_integrator")


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_log():
    """Append a result line that is echoed in the terminal summary."""

    def log(line: str) -> None:
        print(line)
        _ACCEPTANCE.append(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
