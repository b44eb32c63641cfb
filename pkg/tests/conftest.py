import random

import pytest

from hope import HopeParams, gen_comparison_key, keygen, keypair_from_primes
from hope.core import CkRandomness


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def keys15():
    return keypair_from_primes(3, 5)


@pytest.fixture(scope="session")
def keys35():
    return keypair_from_primes(5, 7)


@pytest.fixture(scope="session")
def tiny_params():
    return HopeParams(plaintext_bound=1, eta_bound=2)


@pytest.fixture(scope="session")
def ck15(keys15, tiny_params):
    _, sk = keys15
    return gen_comparison_key(sk, tiny_params, CkRandomness(1, 1, 1))


@pytest.fixture(scope="session")
def keys256():
    return keygen(256, random.Random(256))


@pytest.fixture(scope="session")
def keys128():
    return keygen(128, random.Random(128))


@pytest.fixture(scope="session")
def params128():
    return HopeParams(plaintext_bound=2**20, eta_bound=2**16)


@pytest.fixture(scope="session")
def keys1024():
    return keygen(1024, random.Random(1024))


@pytest.fixture(scope="session")
def default_params():
    return HopeParams()


# one PASS/FAIL line per acceptance criterion in the terminal summary
_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        _criteria[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split("_")[2])):
        verdict, detail = _criteria[name]
        terminalreporter.write_line(f"{verdict} {name} {detail}".rstrip())
