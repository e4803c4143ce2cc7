import pytest

from palmtail.fixtures import e1_measure, e1_spectral, negative_control

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict = {}


@pytest.fixture
def e1():
    return e1_measure()


@pytest.fixture
def e1_law():
    return e1_spectral()


@pytest.fixture
def neg_law():
    return negative_control()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {msg}")
