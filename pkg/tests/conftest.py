import pytest

_LINES = []


@pytest.fixture
def criterion():
    """report(number, ok, summary): log one PASS/FAIL line for the terminal summary."""
    def report(number, ok, summary):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {summary}"
        _LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
