import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zeta_ladder import (  # noqa: E402
    MomentTable,
    MuFamily,
    PanelPolicy,
    WeightedMomentContext,
    ZEvaluator,
    load_table,
)

# Set to a file path to keep the session table between runs.
REUSE_ENV = "ZETA_LADDER_TEST_CACHE"
# hypothesis tests cannot take function-scoped fixtures; they read from here
SESSION = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical check")


@pytest.fixture(scope="session")
def evaluator():
    return ZEvaluator()


@pytest.fixture(scope="session")
def policy():
    return PanelPolicy()


@pytest.fixture(scope="session")
def table(evaluator, policy):
    path = os.environ.get(REUSE_ENV)
    if path and Path(path).exists():
        tab = load_table(path, evaluator, policy, attach=False)
    else:
        tab = MomentTable(evaluator, policy)
    SESSION["table"] = tab
    yield tab
    if path:
        tab.save(path)


@pytest.fixture(scope="session")
def ctx(evaluator, policy, table):
    return WeightedMomentContext(MuFamily(1.0, 1.0), evaluator, policy, table)


@pytest.fixture(scope="session")
def ctx12(evaluator, policy, table):
    return WeightedMomentContext(MuFamily(1.0, 2.0), evaluator, policy, table)


@pytest.fixture(scope="session")
def i100_oracle():
    import oracles

    return oracles.simpson_z4(0.0, 100.0, 1e-4)


@pytest.fixture(scope="session")
def w100_oracle():
    """Simpson value of int_0^{mu(100)} Z^4 e^{-t/100} dt with the default mu."""
    import math

    import numpy as np

    import oracles

    upper = 400.0 * math.log(100.0)
    return oracles.simpson_z4(0.0, upper, 5e-3, weight=lambda t: np.exp(-t / 100.0))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
