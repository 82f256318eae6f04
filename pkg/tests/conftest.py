"""Shared fixtures: the two-plant reference scenario and random-matrix helpers."""

import numpy as np
import pytest

from ncsched import PlantSpec

# Reference two-plant scenario (N=2, M=1): diagonal open-loop dynamics with
# published stabilizing gains. Plant 2's closed loop is only marginally fast
# (abscissa about -0.147), which makes this a stress case for certificate-based
# schedule design.
A1 = np.diag([1.2, 0.8, 0.4, 0.2])
B1 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
K1 = np.array([
    [-40.2184, 0.0, 23.5546, 0.0],
    [0.0, -34.4621, 0.0, 18.7252],
])
A2 = np.array([
    [0.2, 0.0, 0.0, 0.0],
    [0.0, 0.1, 0.0, 0.0],
    [0.0, 0.05, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
])
B2 = np.ones((4, 2))
K2 = 1.0e3 * np.array([
    [-0.8631, 1.1950, -0.4634, -0.0102],
    [-0.8631, 1.1950, -0.4634, -0.0102],
])


@pytest.fixture
def reference_plants():
    return [
        PlantSpec(index=1, a=A1, b=B1, k=K1),
        PlantSpec(index=2, a=A2, b=B2, k=K2),
    ]


def random_hurwitz(rng, d, shift=0.1):
    """Random Hurwitz d x d matrix: random entries shifted left of the axis."""
    m = rng.standard_normal((d, d))
    alpha = float(np.max(np.linalg.eigvals(m).real))
    return m - (alpha + shift) * np.eye(d)


def random_unstable(rng, d, margin=0.1):
    """Random matrix with spectral abscissa >= margin."""
    while True:
        m = rng.standard_normal((d, d))
        if float(np.max(np.linalg.eigvals(m).real)) >= margin:
            return m


def random_spd(rng, d, cond_cap=100.0):
    """Random symmetric positive definite matrix with bounded conditioning."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(1.0, cond_cap, d)
    return q @ np.diag(eigs) @ q.T
