import numpy as np
import pytest

from aggseek import BoxSet, QuadraticGame
from aggseek.scenarios import DEFAULT_INIT_SEED, build_hvac


@pytest.fixture(scope="session")
def hvac():
    return build_hvac()


@pytest.fixture(scope="session")
def hvac_init(hvac):
    return hvac.initial_state(DEFAULT_INIT_SEED)


def random_quadratic(seed, N=3, n=2, coupling=0.1, bounded=False):
    """Well-conditioned random quadratic game with gains near 1."""
    rng = np.random.default_rng(seed)
    Q = np.empty((N, n, n))
    D = np.empty((N, n, n))
    for i in range(N):
        B = rng.normal(size=(n, n))
        Q[i] = B @ B.T / n + np.eye(n)
        D[i] = coupling * rng.normal(size=(n, n))
    d = rng.normal(size=(N, n))
    h = rng.uniform(0.5, 1.5, N)
    k = rng.uniform(0.8, 1.2, N)
    boxes = None
    if bounded:
        center = rng.uniform(-1, 1, (N, n))
        boxes = [BoxSet(center[i] - 2.0, center[i] + 2.0) for i in range(N)]
    return QuadraticGame(Q, D, d, h, k, action_sets=boxes)
