"""Shared helpers for the test suite."""

import numpy as np
from scipy.linalg import expm


def random_tp_gauge(dim, rng, scale=0.3):
    """Random invertible trace-preserving gauge matrix near the identity."""
    k = rng.normal(scale=scale, size=(dim, dim))
    k[0, :] = 0.0
    s = expm(k)
    s[0, :] = 0.0
    s[0, 0] = 1.0
    return s
