import json
import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

# One line per acceptance criterion, filled in by tests/test_acceptance.py
# and echoed after the run so the verdicts survive output capture.
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oracle():
    """Load a frozen derived-oracle fixture by stem name."""

    def load(name):
        data = json.loads((FIXTURES / f"{name}.json").read_text(encoding="utf-8"))
        assert data["provenance"] == "derived-oracle"
        return data

    return load
