import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from builders import BUNDLED  # noqa: E402
from parkplan.cli import pipeline  # noqa: E402
from parkplan.cli.config import load_config  # noqa: E402


@pytest.fixture(scope="session")
def bundled_config():
    return load_config(BUNDLED)


@pytest.fixture(scope="session")
def bundled_scenario(bundled_config):
    return pipeline.Scenario(bundled_config)


@pytest.fixture(scope="session")
def bundled_report(bundled_config):
    return pipeline.run_pipeline(bundled_config)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
