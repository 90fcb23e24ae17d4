import json
from pathlib import Path

import pytest

from va_engine.boundary import picard_solve
from va_engine.contract import ContractSpec, ExponentialPenalty
from va_engine.mortality import MortalityModel

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def bench():
    return ContractSpec()


@pytest.fixture(scope="session")
def mort():
    return MortalityModel()


@pytest.fixture(scope="session")
def bench_boundary(bench, mort):
    return picard_solve(bench, mort, 200, scheme="gauss-seidel")


@pytest.fixture(scope="session")
def late_spec():
    return ContractSpec(penalty=ExponentialPenalty(0.022))


@pytest.fixture(scope="session")
def late_boundary(late_spec, mort):
    return picard_solve(late_spec, mort, 200, scheme="gauss-seidel")


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.REPORT, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
