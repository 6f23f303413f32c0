import numpy as np
import pytest

from relayneut.channel import Precoders, Scenario, generate_channels, read_fixture
from relayneut.harness.replay import table1_path

ACCEPTANCE = {}  # criterion number -> list of (part, passed, detail)


def record(criterion, part, passed, detail):
    """Store one acceptance sub-result and echo it."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}] {'PASS' if passed else 'FAIL'}: {detail}")
    return passed


def acceptance_lines():
    lines = []
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        body = "; ".join(f"{name} {'ok' if p else 'FAILED'} ({d})" for name, p, d in parts)
        lines.append(f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {body}")
    return lines


@pytest.fixture(scope="session")
def table1():
    return read_fixture(table1_path())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(K, M, N, seed, tx=10.0, relay=100.0, dist="uniform01"):
    sc = Scenario(K, M, N, (tx,) * K, relay)
    return sc, generate_channels(sc, seed, dist)


def random_precoders(K, M, rng, rank=None):
    mats = []
    for _ in range(K):
        p = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        if rank is not None:
            p[:, rank:] = 0.0
        mats.append(p)
    return Precoders(tuple(mats))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)
