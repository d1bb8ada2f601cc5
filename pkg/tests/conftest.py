import pytest

from kinfsi.fsi import PhysicalParams, SchemeConfig, build_operators

ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def thin_ops(params):
    return build_operators(SchemeConfig(nx=20, dt=1e-3), params)


@pytest.fixture(scope="session")
def thick_ops(params):
    return build_operators(SchemeConfig(scheme="SPLIT_THICK", nx=10, dt=1e-3), params)
