import pytest

from prime_lab import ToneSet, build_ensemble, sieve_primes

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def check(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append(line)
        assert ok, line
    return check


@pytest.fixture(scope="session")
def table_1e6():
    return sieve_primes(10**6)


@pytest.fixture(scope="session")
def ens10():
    return build_ensemble(sieve_primes(10), 0.5)


@pytest.fixture
def cosine_tone():
    """cos(t): one 'prime' of frequency 1 and weight 1."""
    return ToneSet([1.0], [1.0])
