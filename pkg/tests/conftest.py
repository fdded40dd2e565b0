import json
from pathlib import Path

import pytest

from rotree import kernels
from rotree.envs.blocksworld import BlocksInstance, Goal, generate_instances

DATA = Path(__file__).parent / "data"

B1_INIT = (("blue", "red"), ("orange", "yellow"))
B1_GOAL = Goal((("on", "red", "orange"), ("on", "orange", "blue")))


@pytest.fixture(params=sorted(kernels.implementations()))
def kernel(request):
    return kernels.implementations()[request.param]


@pytest.fixture
def b1_instance():
    return BlocksInstance("b1", B1_INIT, B1_GOAL)


@pytest.fixture(scope="session")
def small_instances():
    return generate_instances(6, (3, 4), 2, seed=5) + generate_instances(6, (3, 5), 4, seed=5)


@pytest.fixture
def rot_script():
    return json.loads((DATA / "rot_mock.json").read_text())


@pytest.fixture
def rot_fixture_path():
    return str(DATA / "rot_mock.json")


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.skipped and not rep.failed):
        return
    num, title = mark.args
    status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
    if rep.when == "call" or status != "PASS":
        _CRITERIA[num] = f"criterion {num}: {status}  {title}"


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[num])
