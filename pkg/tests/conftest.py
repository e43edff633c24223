import os
import sys

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs", "reference")
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def config_dir():
    return CONFIG_DIR


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(RESULTS):
            terminalreporter.write_line(line)
