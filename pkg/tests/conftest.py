import pytest

_LINES = []


@pytest.fixture
def report():
    """Record a one-line criterion verdict shown in the terminal summary."""
    def add(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f": {detail}" if detail else "")
        _LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
