import random

import pytest

from genopriv.groups import default_ca, default_schnorr, gen_rsa, gen_schnorr
from genopriv.scenario import default_scenario


@pytest.fixture(scope="session")
def group512():
    return gen_schnorr(512, 160, seed=5)


@pytest.fixture(scope="session")
def ca512():
    return gen_rsa(512, seed=5)


@pytest.fixture(scope="session")
def toy_group():
    return gen_schnorr(128, 32, seed=3)


@pytest.fixture(scope="session")
def toy_ca():
    return gen_rsa(128, seed=3)


@pytest.fixture(scope="session")
def group1024():
    return default_schnorr()


@pytest.fixture(scope="session")
def ca1024():
    return default_ca()


@pytest.fixture(scope="session")
def scenario():
    return default_scenario(25)


@pytest.fixture
def rng():
    return random.Random(1234)


RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[RESULTS] = []


class _Criterion:
    def __init__(self, config, number, title):
        self.config, self.number, self.title = config, number, title
        self.ok, self.detail = False, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and not self.detail:
            self.detail = f"{exc_type.__name__}: {exc}"
        ok = self.ok and exc_type is None
        line = f"criterion {self.number} [{'PASS' if ok else 'FAIL'}] {self.title}: {self.detail}"
        print(line)
        self.config.stash[RESULTS].append(line)
        return False


@pytest.fixture
def criterion(request):
    return lambda number, title: _Criterion(request.config, number, title)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
