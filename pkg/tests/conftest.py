import numpy as np
import pytest

from securebf import scenario


@pytest.fixture(scope="session")
def default_scenario():
    return scenario.default_scenario()


@pytest.fixture(scope="session")
def default_problem(default_scenario):
    sc = default_scenario
    return sc.channels(), sc.targets(), sc.algorithm()


@pytest.fixture(scope="session")
def default_robust(default_problem):
    from securebf.optimizer import solve_robust

    return solve_robust(*default_problem)


@pytest.fixture(scope="session")
def default_nonrobust(default_problem):
    from securebf.optimizer import solve_non_robust

    return solve_non_robust(*default_problem)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    num, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    prev = _CRITERIA.get(num)
    if prev is None or prev[1] == "PASS":
        _CRITERIA[num] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[num]
        line = f"criterion {num} [{status}] {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
