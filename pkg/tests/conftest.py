import os
import tempfile

import pytest

# keep computed approximants out of the user's cache; the bundled tables
# are still found through the package data directory
os.environ["FRACSOLVE_CACHE_DIR"] = tempfile.mkdtemp(prefix="fracsolve-test-cache-")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
