import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one acceptance line and fail the test if the criterion fails."""
    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, _ACCEPTANCE[number]
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
