import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lrpp import fixture_path  # noqa: E402
from lrpp.graph_env import load_environment_file  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def load_fixture():
    return lambda name: load_environment_file(fixture_path(name))


@pytest.fixture
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
