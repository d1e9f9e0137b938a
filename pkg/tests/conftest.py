import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record the one-line verdict for an acceptance criterion."""
    def record(number: int, title: str, ok: bool, detail: str):
        _LINES[number] = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        print(_LINES[number])
    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])
