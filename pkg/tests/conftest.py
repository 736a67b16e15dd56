import random

import pytest
from hypothesis import HealthCheck, settings

from pseudopairs.synthetic import synthetic_pairs

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# name -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool | None, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        passed, detail = ACCEPTANCE[name]
        tag = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"{tag}  {name}: {detail}")


@pytest.fixture(scope="session")
def db_rows():
    return synthetic_pairs(400, seed=7)


@pytest.fixture(scope="session")
def db_index(db_rows):
    from pseudopairs.retrieval import build_index

    return build_index(db_rows)


@pytest.fixture
def rng():
    return random.Random(1234)
