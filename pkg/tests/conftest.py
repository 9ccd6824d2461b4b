import pytest

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def report(request):
    """Record and echo one PASS/FAIL line for an acceptance criterion."""
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
