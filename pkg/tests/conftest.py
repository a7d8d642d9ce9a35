import os

import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
    out = os.environ.get("LEOQUEUE_ACCEPTANCE_OUT")
    if out:
        with open(out, "w") as fh:
            fh.write("\n".join(ACCEPTANCE) + "\n")
