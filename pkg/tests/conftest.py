import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_VERDICTS: list[tuple[str, bool, str]] = []


class Verdicts:
    """Collects one line per acceptance criterion for the terminal summary."""

    def record(self, name: str, passed: bool, detail: str) -> None:
        _VERDICTS.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
