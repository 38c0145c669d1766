import os
import sys

import pytest
from hypothesis import HealthCheck, settings

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
CONFIGS = os.path.join(ROOT, "configs")

sys.path.insert(0, HERE)

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance lines collected by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def row3_config():
    from burgerscap import load_config
    return load_config(os.path.join(CONFIGS, "row3.cfg"))


@pytest.fixture(scope="session")
def row3_problem(row3_config):
    return row3_config.params(), row3_config.forcing_set()


@pytest.fixture(scope="session")
def row3_local(row3_config, row3_problem):
    from burgerscap.fixedpoint import certify_local
    p, f = row3_problem
    return certify_local(p, f, M=row3_config.M)


@pytest.fixture(scope="session")
def row3_certificate(row3_config):
    from burgerscap import prove_global
    return prove_global(row3_config)
