import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record and print the outcome line of one acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (ok, detail)
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
