import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the summary."""
    def record(label: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(_LINES[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
