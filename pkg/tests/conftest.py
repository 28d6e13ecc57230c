import os

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    # a stray NLSE_SEED in the environment would change every seeded result
    monkeypatch.delenv("NLSE_SEED", raising=False)
    yield


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: desk-scale acceptance criteria")


def pytest_report_header(config):
    return f"nlse tests, NLSE_SEED={'set' if 'NLSE_SEED' in os.environ else 'unset'}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
