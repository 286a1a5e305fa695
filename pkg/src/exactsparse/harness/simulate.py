"""Synthetic data for the accuracy, approximation and sparsity experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EXPERIMENTS = ("accuracy", "approx", "A1", "A2", "A3")


@dataclass
class ExperimentSpec:
    name: str
    n: list = field(default_factory=lambda: [1000])
    replications: int = 1
    seed: int = 0
    prior: str = "beta-binomial:kappa=1,lambda=n+1"
    slab: str = "laplace:a=1"
    algorithm: str = "hmm"
    permuted: bool = False

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if isinstance(self.n, int):
            self.n = [self.n]
        if not self.n or any(int(k) < 1 for k in self.n):
            raise ValueError("sizes must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")


def icbrt_ceil(n: int) -> int:
    """Smallest integer ``r`` with ``r**3 >= n``."""
    r = round(n ** (1.0 / 3.0))
    while r ** 3 < n:
        r += 1
    while r > 0 and (r - 1) ** 3 >= n:
        r -= 1
    return r


def sparsity(name: str, n: int) -> int:
    if name in ("accuracy", "approx"):
        return min(n, math.ceil(0.2 * n - 1e-9))
    if name == "A1":
        return min(n, 10)
    if name == "A2":
        return min(n, icbrt_ceil(n))
    if name == "A3":
        return min(n, 25)
    raise ValueError(f"unknown experiment {name!r}")


def rng_for(seed: int, n: int, replication: int = 0) -> np.random.Generator:
    """Independent Philox stream per (seed, n, replication)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(n), int(replication)])))


def signal(name: str, n: int, s: int, rng: np.random.Generator) -> np.ndarray:
    if name in ("accuracy", "approx"):
        return np.full(s, 4.0 * math.sqrt(2.0 * math.log(n)))
    if name == "A1":
        return rng.uniform(1.0, 10.0, size=s)
    if name == "A2":
        return np.full(s, 2.0 * math.sqrt(2.0 * math.log(n)))
    return rng.uniform(5.0, 10.0, size=s)


def simulate(spec: ExperimentSpec, seed: int | None = None, n: int | None = None, replication: int = 0):
    """Draw ``(Y, theta, support)``; the support is the first ``s`` indices unless permuted."""
    n = int(spec.n[0] if n is None else n)
    seed = spec.seed if seed is None else seed
    rng = rng_for(seed, n, replication)
    s = sparsity(spec.name, n)
    values = signal(spec.name, n, s, rng)
    noise = rng.standard_normal(n)
    support = np.arange(s)
    if spec.permuted:
        support = np.sort(rng.permutation(n)[:s])
    theta = np.zeros(n)
    theta[support] = values
    return theta + noise, theta, support
