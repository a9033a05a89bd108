import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def report_line():
    """Record a criterion verdict line; all lines print in the terminal summary."""
    def record(line: str) -> None:
        print(line)
        _acceptance_lines.append(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
