import pytest

import acceptance_log
from sensorsched.coding import ModelParams
from sensorsched.dp import HorizonSpec, solve


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance_log.RESULTS):
        ok, detail = acceptance_log.RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


@pytest.fixture(scope="session")
def unit_params():
    """rate 1, SNR 1: m = 1/2."""
    return ModelParams(rate=1.0, shape=1.0, power=1.0)


@pytest.fixture(scope="session")
def table_100_20(unit_params):
    return solve(HorizonSpec(100, 20), unit_params)
