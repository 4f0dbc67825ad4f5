import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""

    def _record(label: str, ok: bool, detail: str) -> bool:
        _RESULTS[label] = (bool(ok), detail)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        ok, detail = _RESULTS[label]
        terminalreporter.line(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
