"""Shared fixtures: the four-state benchmark plant and its two channel banks."""

import numpy as np
import pytest

from netstab import ChannelEnsemble, Plant

#: Published isometries for the benchmark problem (4 decimal places).
U_BENCH_AWGN = np.array(
    [[0.7817, 0.4714], [0.4629, 0.0], [-0.4179, 0.8819]]
)
U_BENCH_FADING = np.array(
    [[0.8952, -0.1993], [0.0, 0.8944], [0.4456, 0.4004]]
)

F_BENCH = np.array([[-40.0, 36.0, -10.0, 0.0], [0.0, 0.0, 0.0, -2.0]])


@pytest.fixture
def bench_plant():
    A = np.diag([4.0, 2.0, 1.0, 1.0])
    B = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [0.0, 1.0]])
    return Plant(A=A, B=B, x0=np.ones(4))


@pytest.fixture
def bench_awgn():
    return ChannelEnsemble(
        kind="awgn", power=[9.1, 3.1, 4.1], noise_density=[1.0, 1.0, 1.0]
    )


@pytest.fixture
def bench_fading():
    return ChannelEnsemble(
        kind="fading", mean=[2.0, 0.6, 0.9], variance=[0.35, 0.2, 0.25]
    )


def nearest_isometry(U):
    """Polar factor: the closest matrix with exactly orthonormal columns."""
    u, _, vt = np.linalg.svd(U, full_matrices=False)
    return u @ vt
