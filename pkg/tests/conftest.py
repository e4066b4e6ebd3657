import pytest

_LINES = []


class AcceptanceRecorder:
    """Prints one PASS/FAIL line per criterion and keeps it for the summary."""

    def __call__(self, criterion: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        print(line)
        _LINES.append(line)
        return passed


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
