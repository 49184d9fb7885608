import pytest

from svtl import fixture_path, load_model

ACCEPTANCE = {}


def record(number, passed, text):
    ACCEPTANCE[number] = (passed, text)


@pytest.fixture
def fixture_model():
    def load(name, **consts):
        return load_model(fixture_path(name), consts or None)
    return load


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {text}")
