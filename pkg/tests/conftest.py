import pytest

# (criterion, passed, detail) rows recorded by test_acceptance.py
ACCEPTANCE_RESULTS = []


@pytest.fixture
def record_criterion():
    def record(name, passed, detail):
        ACCEPTANCE_RESULTS.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
