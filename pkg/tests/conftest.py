import pytest

ACCEPTANCE_LINES: list = []


@pytest.fixture
def record():
    """Collects one status line per acceptance criterion for the final summary."""

    def _record(number: int, title: str, ok: bool, detail: str, seconds: float, limit: float | None):
        timing = f"{seconds:.2f}s" + (f" (limit {limit:g}s)" if limit else "")
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {title}: {detail}; {timing}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
