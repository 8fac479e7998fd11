import os

import pytest

from primerace.zeros import compute_table, reference_table, ZeroTable


@pytest.fixture(scope="session", autouse=True)
def isolated_cache(tmp_path_factory):
    root = tmp_path_factory.mktemp("cache")
    old = os.environ.get("PRIMERACE_CACHE")
    os.environ["PRIMERACE_CACHE"] = str(root)
    yield root
    if old is None:
        os.environ.pop("PRIMERACE_CACHE", None)
    else:
        os.environ["PRIMERACE_CACHE"] = old


@pytest.fixture(scope="session")
def zeta_table() -> ZeroTable:
    return reference_table("1.1")


@pytest.fixture(scope="session")
def chi4_table() -> ZeroTable:
    return reference_table("4.3")


@pytest.fixture(scope="session")
def mod5_table(isolated_cache) -> ZeroTable:
    return compute_table(5, 200)


@pytest.fixture(scope="session")
def sieve_1e6(isolated_cache):
    from primerace.sieve import sieve

    return {q: sieve(10**6, q) for q in (3, 4, 5, 8)}


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary and echo it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(name: str, ok: bool, detail: str = ""):
        line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
