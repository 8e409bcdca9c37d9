import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record ``(number, title, ok, detail)`` for the end-of-run acceptance summary."""

    def record(number, title, ok, detail=""):
        _RESULTS[number] = (title, bool(ok), detail)
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    passed = sum(ok for _, ok, _ in _RESULTS.values())
    terminalreporter.write_line(f"{passed}/{len(_RESULTS)} criteria passed")
