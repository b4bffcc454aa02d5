import numpy as np
import pytest

from chemostat_rds import BASE_CONSTANTS, ChemostatParams


@pytest.fixture
def params():
    return ChemostatParams(D=3.0, alpha=0.5, **BASE_CONSTANTS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k.split()[-1])):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
