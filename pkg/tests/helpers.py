"""Small shared builders for test inputs."""
import numpy as np

from exactsparse.slabs import LaplaceSlab, log_phi


def inputs(y, slab=None):
    slab = slab or LaplaceSlab(1.0)
    y = np.asarray(y, dtype=np.float64)
    return np.asarray(slab.log_psi(y), dtype=np.float64), log_phi(y)


def sparse_sample(rng, n, s=None, signal=4.0):
    s = max(1, n // 5) if s is None else s
    theta = np.zeros(n)
    theta[rng.choice(n, s, replace=False)] = signal * rng.choice([-1, 1], s)
    return theta + rng.standard_normal(n)


def assert_contains(result, exact, slack=0.0):
    exact = np.array([float(v) for v in exact])
    assert np.all(result.lower <= exact + slack), np.max(result.lower - exact)
    assert np.all(exact <= result.upper + slack), np.max(exact - result.upper)
