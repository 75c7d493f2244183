import pytest

from acm import ContextEngine, EngineConfig, TokenBudget

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome, print it, and assert it."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _CRITERIA.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")


@pytest.fixture
def make_engine():
    def make(ms_max=512, sm_limit=120, threshold=0.75, **kwargs):
        return ContextEngine(EngineConfig(TokenBudget(ms_max, sm_limit, threshold), **kwargs))

    return make
