import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def haar_unitary(rng, N):
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_density(rng, N):
    """Full-rank Ginibre density matrix GG†/tr."""
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    M = G @ G.conj().T
    return M / np.trace(M).real


def random_diagonal(rng, N):
    p = rng.random(N) + 1e-3
    return p / p.sum()


def random_sequence(rng, system, M, tau, amp=2.0):
    from qswitch import ControlSequence

    coherent = rng.uniform(-amp, amp, size=(M, system.num_controls))
    noise = np.column_stack(
        [rng.uniform(0.0, ch.max_rate, size=M) for ch in system.channels]
    ) if system.num_switchable else np.zeros((M, 0))
    return ControlSequence.uniform(tau, coherent, noise)
