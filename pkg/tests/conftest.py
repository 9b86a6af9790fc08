import pytest

from acdyn.models import AsisParams

IFE_CASE = AsisParams(beta=0.3, beta_a=0.35, alpha=0.1, x_a=0.6)
ENDEMIC_CASE = AsisParams(beta=0.3, beta_a=0.28, alpha=0.1, x_a=0.2)

_criterion_lines: list[str] = []


@pytest.fixture
def ife_case():
    return IFE_CASE


@pytest.fixture
def endemic_case():
    return ENDEMIC_CASE


@pytest.fixture
def criterion_log():
    return _criterion_lines


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
