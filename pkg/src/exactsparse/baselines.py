"""Approximate inference baselines to be scored against the exact engine.

* :func:`gibbs` alternates between the inclusion bits given ``α`` and ``α``
  given the bits (``θ`` is integrated out), and reports post-burn-in
  inclusion frequencies.
* :func:`vb_componentwise` is coordinate-ascent variational Bayes with the
  factorisation ``q(θ_i, B_i)`` per coordinate and a Gaussian slab.  With
  ``hyper="fixed-odds"`` the inclusion weight is held at its prior mean
  ``κ/(κ+λ)``; with ``hyper="mean-field"`` it gets its own Beta factor.

Random numbers come from numpy's counter-based Philox generator so a seed
fully determines a run.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, digamma, expit, xlogy

from .slabs import GaussianSlab, Slab, log_phi

GIBBS_DEFAULT_ITERATIONS = 10_000
VB_HYPER_MODES = ("fixed-odds", "mean-field")


@dataclass
class GibbsConfig:
    iterations: int = GIBBS_DEFAULT_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 2:
            raise ValueError("need at least two iterations")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def burn_in(self) -> int:
        return self.iterations // 2


@dataclass
class ApproxResult:
    q: np.ndarray
    runtime: float
    config: dict
    converged: bool = True
    trace: list = field(default_factory=list)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _llr(y, slab: Slab):
    y = np.asarray(y, dtype=np.float64)
    return np.asarray(slab.log_psi(y), dtype=np.float64) - log_phi(y)


def gibbs(y, kappa: float, lam: float, slab: Slab | None = None, cfg: GibbsConfig | None = None) -> ApproxResult:
    """Collapsed Gibbs sampler for the Beta-mixed spike-and-slab prior."""
    cfg = cfg or GibbsConfig()
    slab = slab or GaussianSlab(1.0)
    if not (kappa > 0 and lam > 0):
        raise ValueError("kappa and lambda must be positive")
    start = time.perf_counter()
    llr = _llr(y, slab)
    n = llr.size
    rng = make_rng(cfg.seed)
    alpha = kappa / (kappa + lam)
    counts = np.zeros(n)
    kept = 0
    for it in range(cfg.iterations):
        logit = math.log(alpha) - math.log1p(-alpha) if 0 < alpha < 1 else (math.inf if alpha >= 1 else -math.inf)
        bits = rng.random(n) < expit(logit + llr)
        ones = int(bits.sum())
        alpha = rng.beta(kappa + ones, lam + n - ones)
        if it >= cfg.burn_in:
            counts += bits
            kept += 1
    q = counts / kept
    return ApproxResult(q, time.perf_counter() - start,
                        {"method": "gibbs", "iterations": cfg.iterations, "burn_in": cfg.burn_in,
                         "seed": cfg.seed, "generator": "philox", "kappa": kappa, "lambda": lam})


def _elbo(y, gamma, mu, s2, v, e_log_a, e_log_1ma, alpha_kl):
    gamma = np.clip(gamma, 0.0, 1.0)
    lik = -0.5 * math.log(2 * math.pi) - 0.5 * ((1 - gamma) * y * y + gamma * ((y - mu) ** 2 + s2))
    slab_prior = gamma * (-0.5 * math.log(2 * math.pi * v) - (mu * mu + s2) / (2 * v))
    incl = gamma * e_log_a + (1 - gamma) * e_log_1ma
    entropy = -xlogy(gamma, gamma) - xlogy(1 - gamma, 1 - gamma) + gamma * 0.5 * np.log(2 * math.pi * math.e * s2)
    return float(np.sum(lik + slab_prior + incl + entropy) - alpha_kl)


def _beta_kl(a, b, kappa, lam):
    """KL(Beta(a, b) || Beta(kappa, lam))."""
    return float(betaln(kappa, lam) - betaln(a, b) + (a - kappa) * digamma(a) + (b - lam) * digamma(b)
                 + (kappa - a + lam - b) * digamma(a + b))


def vb_componentwise(y, kappa: float, lam: float, slab: GaussianSlab | None = None, tol: float = 1e-10,
                     max_iter: int = 1000, hyper: str = "fixed-odds") -> ApproxResult:
    """Coordinate-ascent VB; returns inclusion probabilities and the ELBO trace."""
    slab = slab or GaussianSlab(1.0)
    if not isinstance(slab, GaussianSlab):
        raise TypeError("variational updates are derived for the Gaussian slab")
    if hyper not in VB_HYPER_MODES:
        raise ValueError(f"hyper must be one of {VB_HYPER_MODES}")
    if not (kappa > 0 and lam > 0):
        raise ValueError("kappa and lambda must be positive")
    start = time.perf_counter()
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    v = slab.variance
    gamma = np.full(n, kappa / (kappa + lam))
    mu = y.copy()
    s2 = np.full(n, v / (1 + v))
    a, b = kappa + gamma.sum(), lam + n - gamma.sum()

    def alpha_terms():
        if hyper == "fixed-odds":
            w = kappa / (kappa + lam)
            return math.log(w), math.log1p(-w), 0.0
        return digamma(a) - digamma(a + b), digamma(b) - digamma(a + b), _beta_kl(a, b, kappa, lam)

    trace = [_elbo(y, gamma, mu, s2, v, *alpha_terms())]
    converged = False
    for _ in range(max_iter):
        e_a, e_1ma, _kl = alpha_terms()
        s2 = np.full(n, v / (1 + v))
        mu = s2 * y
        gamma = expit(e_a - e_1ma + 0.5 * np.log(s2 / v) + mu * mu / (2 * s2))
        if hyper == "mean-field":
            a, b = kappa + gamma.sum(), lam + n - gamma.sum()
        trace.append(_elbo(y, gamma, mu, s2, v, *alpha_terms()))
        if abs(trace[-1] - trace[-2]) < tol:
            converged = True
            break
    return ApproxResult(gamma, time.perf_counter() - start,
                        {"method": "vb", "hyper": hyper, "tol": tol, "max_iter": max_iter,
                         "kappa": kappa, "lambda": lam, "slab_variance": v},
                        converged, trace)


def approx_error(q_exact, q_approx) -> float:
    """``max_i |q_i - q̃_i|``."""
    a = np.asarray(q_exact, dtype=np.float64)
    b = np.asarray(q_approx, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) if a.size else 0.0
