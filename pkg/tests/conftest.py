"""Shared fixtures: reference chains and generator-matrix factories."""

import numpy as np
import pytest

from restartk import FiniteCTMC, FiniteSupport


def random_generator(rng, n, scale=1.0):
    """A dense ergodic generator matrix with rates of order ``scale``."""
    Q = rng.uniform(0.5, 1.5, size=(n, n)) * scale
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def random_restart_weights(rng, n):
    w = rng.uniform(0.2, 1.0, size=n)
    return w / w.sum()


def finite_support_from_weights(w):
    pts = tuple((i, float(x)) for i, x in enumerate(w))
    # rescale the last weight so the sum is exactly 1 in floats
    total = sum(x for _, x in pts[:-1])
    pts = pts[:-1] + ((len(w) - 1, 1.0 - total),)
    return FiniteSupport(pts)


@pytest.fixture
def three_state_chain():
    Q = np.array([[-2.0, 1.5, 0.5], [1.0, -3.0, 2.0], [0.5, 0.5, -1.0]])
    return FiniteCTMC(Q, [0.3, -1.2, 2.5])
