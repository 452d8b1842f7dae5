import pytest

_ACCEPTANCE = {}


class AcceptanceReport:
    def record(self, key: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE[key] = (ok, detail)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceReport()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
