import pytest

from gridfreq.governor import Tgov1Params
from gridfreq.reference import ercot_aggregate_case, single_unit_case, ten_unit_fleet


@pytest.fixture
def lone_machine():
    """1000 MVA, H = 5 s, no governor, no load damping."""
    return single_unit_case(h=5.0, s_rated=1000.0, p_gen=800.0, d_load=0.0)


@pytest.fixture
def droop_machine():
    """One responsive unit whose rating is the system base; P_load / S_base = 1."""
    return single_unit_case(h=5.0, s_rated=1000.0, p_gen=800.0, governor=Tgov1Params(),
                            d_load=1.0, pv_mw=200.0)


@pytest.fixture(scope="session")
def fleet10():
    return ten_unit_fleet()


@pytest.fixture(scope="session")
def ercot():
    return ercot_aggregate_case()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
