import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture(scope="session")
def pac_amid_sweep():
    """PAC AMID at n0 = 0..10 plus its wall time in seconds (about 40 s), shared across modules."""
    import math
    import time

    from cvdiscord.homodyne import channel_amid

    n0 = np.arange(11)
    start = time.perf_counter()
    res = [channel_amid("pac", math.sqrt(n)) for n in n0]
    return n0, res, time.perf_counter() - start


# acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
