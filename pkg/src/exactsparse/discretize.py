"""Spike-and-slab inference on a finite grid of mixing weights.

The mixing weight ``α`` is replaced by a distribution on ``k`` points that are
equally spaced in ``β = arcsin √α``.  Given ``α`` the coordinates are
independent, so the posterior over grid points costs ``O(kn)`` and each
inclusion probability ``O(k)``.  With ``k ≍ m √n`` the total is
``O(m n^1.5)``.

A Beta prior on ``α`` can be handled by *fast-forwarding*: ``Beta(κ, λ)``
equals the ``Beta(1/2, 1/2)`` posterior after ``κ - 1/2`` fake ones and
``λ - 1/2`` fake zeros, and ``Beta(1/2, 1/2)`` discretises to uniform weights.
The grid is then sized for the effective sample size ``n + κ + λ - 1``.

:func:`epsilon_bound` reports how far the grid's pattern probabilities
``∫ α^s (1-α)^(n-s) dΛ`` stray from the exact ones, relative to the exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, betaincc, betaln, expit, logsumexp

from .inclusion import InclusionProbs
from .lognum import NEG_INF
from .priors import BetaMixing, DensityMixing

DEFAULT_M = 20
# rows of the (grid point x coordinate) matrix processed at once
_CHUNK_ELEMENTS = 1 << 22


def ceil_sqrt(x: float) -> int:
    """Smallest integer ``r`` with ``r*r >= x``."""
    if x <= 0:
        return 0
    r = math.isqrt(math.ceil(x))
    while r * r < x:
        r += 1
    while r > 0 and (r - 1) * (r - 1) >= x:
        r -= 1
    return r


@dataclass(frozen=True)
class DiscretizationGrid:
    m: int
    k: int
    n_eff: float
    delta: float
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    log_alpha: np.ndarray = field(repr=False)
    log1m_alpha: np.ndarray = field(repr=False)

    @property
    def edges_alpha(self) -> np.ndarray:
        """``α`` at the bin boundaries ``β = 0, δ, ..., kδ``."""
        b = np.arange(self.k + 1) * self.delta
        e = np.sin(b) ** 2
        e[0], e[-1] = 0.0, 1.0
        return e


def build_grid(n: int, m: int = DEFAULT_M, kappa: float | None = None, lam: float | None = None) -> DiscretizationGrid:
    """Arcsine grid with ``k = 2(m+1)⌈√n'⌉ + 1`` points.

    ``n' = n + κ + λ - 1`` when ``kappa`` and ``lam`` are given (fast-forward
    sizing), otherwise ``n' = n``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if (kappa is None) != (lam is None):
        raise ValueError("give both kappa and lam or neither")
    if kappa is not None:
        if kappa < 0.5 or lam < 0.5:
            raise ValueError("fast-forward needs kappa, lambda >= 1/2")
        n_eff = n + kappa + lam - 1
    else:
        n_eff = float(n)
    k = 2 * (m + 1) * ceil_sqrt(n_eff) + 1
    delta = math.pi / (2 * k)
    j = np.arange(1, k + 1)
    beta = (2 * j - 1) * delta / 2
    sb, cb = np.sin(beta), np.cos(beta)
    return DiscretizationGrid(
        m=m, k=k, n_eff=n_eff, delta=delta, beta=beta, alpha=sb * sb,
        log_alpha=2 * np.log(sb), log1m_alpha=2 * np.log(cb),
    )


@dataclass(frozen=True)
class AtomicMixing:
    """A discrete mixing distribution with atoms in ``[0, 1]``."""

    atoms: tuple
    weights: tuple

    def __post_init__(self):
        a = np.asarray(self.atoms, float)
        w = np.asarray(self.weights, float)
        if a.shape != w.shape or (a < 0).any() or (a > 1).any() or (w < 0).any():
            raise ValueError("atoms must lie in [0, 1] with nonnegative weights")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("atom weights must sum to 1")


@dataclass(frozen=True)
class DiscreteMixingPrior:
    grid: DiscretizationGrid
    log_weights: np.ndarray = field(repr=False)
    source: object = None
    fastforward: bool = False

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _normalise(log_w: np.ndarray) -> np.ndarray:
    return log_w - logsumexp(log_w)


def discretize_mixing(mixing, grid: DiscretizationGrid) -> DiscreteMixingPrior:
    """Give each grid point the prior mass of its ``β``-bin."""
    edges = grid.edges_alpha
    if isinstance(mixing, BetaMixing):
        a, b = mixing.kappa, mixing.lam
        lower = betainc(a, b, edges)
        upper = betaincc(a, b, edges)
        # take differences on whichever tail keeps precision
        use_upper = edges[:-1] > a / (a + b)
        mass = np.where(use_upper, upper[:-1] - upper[1:], lower[1:] - lower[:-1])
    elif isinstance(mixing, DensityMixing):
        mass = np.array([mixing.mass(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    elif isinstance(mixing, AtomicMixing):
        mass = np.zeros(grid.k)
        for atom, w in zip(mixing.atoms, mixing.weights):
            b = math.asin(math.sqrt(atom))
            # an atom on a boundary goes to the bin on its left
            j = min(max(math.ceil(b / grid.delta), 1), grid.k)
            mass[j - 1] += w
    else:
        raise TypeError(f"unsupported mixing prior {type(mixing).__name__}")
    mass = np.maximum(mass, 0.0)
    with np.errstate(divide="ignore"):
        return DiscreteMixingPrior(grid, _normalise(np.log(mass)), mixing, False)


def beta_fastforward(kappa: float, lam: float, grid: DiscretizationGrid) -> DiscreteMixingPrior:
    """Uniform grid weights tilted by ``κ - 1/2`` fake ones and ``λ - 1/2`` fake zeros."""
    if kappa < 0.5 or lam < 0.5:
        raise ValueError("fast-forward needs kappa, lambda >= 1/2")
    log_w = (kappa - 0.5) * grid.log_alpha + (lam - 0.5) * grid.log1m_alpha
    return DiscreteMixingPrior(grid, _normalise(log_w), BetaMixing(kappa, lam), True)


def make_discrete_prior(n: int, mixing, m: int = DEFAULT_M, fastforward: bool | None = None) -> DiscreteMixingPrior:
    """Grid prior for ``n`` coordinates; Beta mixing fast-forwards by default."""
    is_beta = isinstance(mixing, BetaMixing)
    if fastforward is None:
        fastforward = is_beta and mixing.kappa >= 0.5 and mixing.lam >= 0.5
    if fastforward:
        if not is_beta:
            raise ValueError("fast-forward applies to Beta mixing only")
        grid = build_grid(n, m, mixing.kappa, mixing.lam)
        return beta_fastforward(mixing.kappa, mixing.lam, grid)
    return discretize_mixing(mixing, build_grid(n, m))


def _chunks(k: int, n: int):
    rows = max(1, _CHUNK_ELEMENTS // max(n, 1))
    for start in range(0, k, rows):
        yield slice(start, min(k, start + rows))


def _loglik(logit, llr):
    """``Σ_i ln(1 + exp(logit_j + llr_i))`` for every grid point ``j``."""
    out = np.empty(logit.size)
    for sl in _chunks(logit.size, llr.size):
        z = logit[sl, None] + llr[None, :]
        np.logaddexp(0.0, z, out=z)
        out[sl] = z.sum(axis=1)
    return out


def _unnormalised_log_posterior(dprior, llr):
    g = dprior.grid
    with np.errstate(invalid="ignore"):
        lp = dprior.log_weights + llr.size * g.log1m_alpha + _loglik(g.log_alpha - g.log1m_alpha, llr)
    return np.where(np.isneginf(dprior.log_weights), NEG_INF, lp)


def grid_log_posterior(dprior: DiscreteMixingPrior, log_psi, log_phi) -> np.ndarray:
    """Normalised log posterior over grid points."""
    llr = np.asarray(log_psi, float) - np.asarray(log_phi, float)
    lp = _unnormalised_log_posterior(dprior, llr)
    return lp - logsumexp(lp)


def q_all_discrete(dprior: DiscreteMixingPrior, log_psi, log_phi) -> InclusionProbs:
    """Approximate inclusion probabilities from the grid posterior."""
    g = dprior.grid
    log_phi = np.asarray(log_phi, float)
    llr = np.asarray(log_psi, float) - log_phi
    lp = _unnormalised_log_posterior(dprior, llr)
    norm = float(logsumexp(lp))
    post = np.exp(lp - norm)
    live = post > 0
    post, logit = post[live], (g.log_alpha - g.log1m_alpha)[live]
    q = np.zeros(llr.size)
    for sl in _chunks(post.size, llr.size):
        q += post[sl] @ expit(logit[sl, None] + llr[None, :])
    q = np.clip(q, 0.0, 1.0)
    log_marginal = norm + float(log_phi.sum())
    return InclusionProbs(q, q, q, log_marginal, None, f"discrete(m={g.m})")


@dataclass(frozen=True)
class EpsilonBound:
    """Relative accuracy of the grid's pattern probabilities.

    ``epsilon`` is the tightest value with every ratio in
    ``[1 - epsilon, 1 + epsilon]`` at the level the grid was built for.  In
    fast-forward mode that level is the fake-observation problem and the
    guarantee for the real pattern probabilities is ``epsilon_prime =
    2 epsilon / (1 - epsilon)``; otherwise ``epsilon_prime = epsilon``.
    ``ratio_min`` / ``ratio_max`` are the measured ratios (approximate over
    exact) of the real pattern probabilities.
    """

    epsilon: float
    epsilon_prime: float
    ratio_min: float
    ratio_max: float
    fastforward: bool

    @property
    def posterior_ratio(self) -> float:
        """Upper bound on the ratio of any two posteriors (approximate vs exact)."""
        e = self.epsilon_prime
        return (1 + e) / (1 - e) if e < 1 else math.inf


def _grid_pattern_log(grid: DiscretizationGrid, log_w, ones, zeros) -> np.ndarray:
    """``ln Σ_j w_j α_j^ones (1-α_j)^zeros`` for paired exponent vectors."""
    ones = np.asarray(ones, float)
    zeros = np.asarray(zeros, float)
    out = np.empty(ones.size)
    for sl in _chunks(ones.size, grid.k):
        mat = (log_w[None, :] + ones[sl, None] * grid.log_alpha[None, :]
               + zeros[sl, None] * grid.log1m_alpha[None, :])
        out[sl] = logsumexp(mat, axis=1)
    return out


def epsilon_bound(dprior: DiscreteMixingPrior, n: int) -> EpsilonBound:
    """Numeric accuracy of the grid prior for ``n`` coordinates."""
    g = dprior.grid
    s = np.arange(n + 1, dtype=float)
    mixing = dprior.source
    if dprior.fastforward:
        kappa, lam = mixing.kappa, mixing.lam
        # fake-observation level: uniform weights against Beta(1/2, 1/2)
        ones = np.concatenate([s + kappa - 0.5, [kappa - 0.5]])
        zeros = np.concatenate([n - s + lam - 0.5, [lam - 0.5]])
        approx = _grid_pattern_log(g, np.full(g.k, -math.log(g.k)), ones, zeros)
        exact = betaln(ones + 0.5, zeros + 0.5) - betaln(0.5, 0.5)
        r = np.exp(approx - exact)
        eps = float(max(r.max() - 1.0, 1.0 - r.min()))
        eps_prime = 2 * eps / (1 - eps) if eps < 1 else math.inf
    else:
        eps = eps_prime = None
    approx_real = _grid_pattern_log(g, dprior.log_weights, s, n - s)
    if isinstance(mixing, (BetaMixing, DensityMixing)):
        exact_real = mixing.log_pattern_prob(n)
    else:
        raise TypeError("epsilon bound needs a Beta or density mixing prior")
    real = np.exp(approx_real - exact_real)
    if eps is None:
        eps = eps_prime = float(max(real.max() - 1.0, 1.0 - real.min()))
    return EpsilonBound(eps, eps_prime, float(real.min()), float(real.max()), dprior.fastforward)
