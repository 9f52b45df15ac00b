import numpy as np
import pytest

from paretodp.baselines import experts_regret_game
from paretodp.solver import grid_unit, value_iteration


def regret_solve(K, beta, N, n):
    g, rec = experts_regret_game(K, beta)
    return value_iteration(g, N, iterations=n, record=rec, unit=grid_unit(rec, beta, 1.0))


@pytest.fixture(scope="session")
def solved_half():
    """Two experts, beta 1/2, the closed-form case."""
    return regret_solve(2, 0.5, 100, 30)


@pytest.fixture(scope="session")
def solved_small():
    return regret_solve(2, 0.8, 30, 15)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    detail = dict(report.user_properties).get("detail", "")
    _CRITERIA[int(name.split("_")[2])] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        verdict, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {verdict}  {detail}")
