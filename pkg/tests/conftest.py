import numpy as np
import pytest

from bmgf.config import small_config
from bmgf.encoder import Vocabulary

WORDS = "the market fell because rates rose but investors stayed calm then prices recovered".split()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def vocab():
    return Vocabulary.build([" ".join(WORDS)])


@pytest.fixture
def tiny_config():
    return small_config()


def random_pair(rng, m, n, d):
    """Random unpadded (M+2, d) and (N+2, d) argument rows."""
    return rng.normal(size=(m + 2, d)), rng.normal(size=(n + 2, d))


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE: list[str] = []


def record(criterion: str, passed: bool, detail: str, warn_only: bool = False) -> None:
    status = "PASS" if passed else ("WARN" if warn_only else "FAIL")
    line = f"[{status}] {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
