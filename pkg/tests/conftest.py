import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, title, ok, detail)`` then assert ``ok``."""

    def record(number, title, ok, detail=""):
        _RESULTS.append((number, title, "PASS" if ok else "FAIL", detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    record.skip = lambda number, title, reason: (_RESULTS.append((number, title, "SKIP", reason)),
                                                 pytest.skip(reason))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_RESULTS, key=lambda r: (r[0], r[1])):
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}" + (f" -- {detail}" if detail else ""))
