import numpy as np
import pytest

from heatq import Potential


def random_smooth_potential(rng, n_nodes=201, amplitude=5.0, modes=4):
    """Low-pass random potential scaled to the requested max amplitude."""
    x = np.linspace(0.0, 1.0, n_nodes)
    q = np.zeros(n_nodes)
    for m in range(1, modes + 1):
        decay = 0.5**m
        q += decay * (
            rng.normal() * np.cos(2 * np.pi * m * x)
            + rng.normal() * np.sin(2 * np.pi * m * x)
        )
    q += 0.3 * rng.normal()
    peak = np.max(np.abs(q))
    if peak > 0:
        q *= amplitude / peak
    return Potential(q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def q_free():
    return Potential.constant(0.0, 201)


@pytest.fixture
def q_sin():
    return Potential.from_function(lambda x: np.sin(2 * np.pi * x), 201)
