"""Priors on the number of nonzero coordinates and their derived tables.

A :class:`ModelSelectionPrior` is a pmf ``π(s)`` on ``{0, ..., n}``.  Choosing
``s`` from it and then a support of size ``s`` uniformly at random makes every
binary inclusion pattern with ``m`` ones equally likely, with probability
``π(m) / C(n, m)``.  Summing out the tail of a pattern gives the prefix
probabilities ``v_i(m)`` (:class:`VTable`), from which the conditional
inclusion law of the next coordinate follows.

Mixing priors on the inclusion weight ``α`` (:class:`BetaMixing`,
:class:`DensityMixing`) are used by the grid algorithm and by the
representability round-trip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln, logsumexp

from .lognum import NEG_INF, LogInterval, add_down, add_up, ladd, log_down, log_up, sub_down, sub_up

_EPS = np.finfo(np.float64).eps


def log_binom(n: int, s) -> np.ndarray:
    """``ln C(n, s)`` through log-gamma."""
    s = np.asarray(s, dtype=np.float64)
    return gammaln(n + 1.0) - gammaln(s + 1.0) - gammaln(n - s + 1.0)


@dataclass(frozen=True)
class ModelSelectionPrior:
    """A normalised pmf on ``{0, ..., n}`` held as logs.

    ``log_err`` bounds the absolute error of each entry of ``log_pmf`` and is
    used to seed tracked computations.
    """

    n: int
    log_pmf: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)
    log_err: np.ndarray | None = None

    def __post_init__(self):
        lp = np.asarray(self.log_pmf, dtype=np.float64)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if lp.shape != (self.n + 1,):
            raise ValueError(f"log_pmf must have n+1 = {self.n + 1} entries")
        if np.isnan(lp).any() or np.isposinf(lp).any():
            raise ValueError("log_pmf entries must be finite or -inf")
        total = logsumexp(lp)
        if not math.isfinite(total):
            raise ValueError("prior has no mass")
        if abs(total) > 1e-12:
            raise ValueError(f"prior is not normalised (log total {total:.3e})")
        object.__setattr__(self, "log_pmf", lp)
        err = self.log_err
        if err is None:
            err = 8 * _EPS * (np.abs(lp) + 1.0)
        object.__setattr__(self, "log_err", np.where(np.isneginf(lp), 0.0, np.asarray(err, float)))

    # -- constructors ------------------------------------------------------
    @classmethod
    def _from_log_weights(cls, n, log_w, family, params, term_scale=None):
        log_w = np.asarray(log_w, dtype=np.float64)
        total = logsumexp(log_w)
        if not math.isfinite(total):
            raise ValueError("prior has no mass")
        lp = log_w - total
        scale = np.abs(log_w) + abs(total) + 1.0
        if term_scale is not None:
            scale = scale + term_scale
        # a handful of roundings per term, each relative to its magnitude
        err = 16 * _EPS * scale + 4 * _EPS * (n + 1)
        return cls(n, lp, family, dict(params), err)

    @classmethod
    def beta_binomial(cls, n: int, kappa: float, lam: float) -> "ModelSelectionPrior":
        if kappa < 0 or lam < 0 or (kappa == 0 and lam == 0):
            raise ValueError("beta-binomial needs kappa, lambda >= 0, not both zero")
        s = np.arange(n + 1, dtype=np.float64)
        if kappa == 0 or lam == 0:
            # degenerate mixing: all mass at alpha = 0 or alpha = 1
            lw = np.full(n + 1, NEG_INF)
            lw[0 if kappa == 0 else n] = 0.0
            return cls._from_log_weights(n, lw, "beta-binomial", {"kappa": kappa, "lambda": lam})
        lc = log_binom(n, s)
        lb = betaln(kappa + s, lam + n - s)
        lb0 = betaln(kappa, lam)
        lw = lc + lb - lb0
        mag = np.abs(gammaln(n + 1.0)) + np.abs(lb) + abs(lb0) + 4 * np.abs(gammaln(kappa + lam + n))
        return cls._from_log_weights(n, lw, "beta-binomial", {"kappa": kappa, "lambda": lam}, mag)

    @classmethod
    def binomial(cls, n: int, p: float) -> "ModelSelectionPrior":
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        s = np.arange(n + 1, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            ones = np.where(s > 0, s * np.log(p) if p > 0 else NEG_INF, 0.0)
            zeros = np.where(n - s > 0, (n - s) * np.log1p(-p) if p < 1 else NEG_INF, 0.0)
        lw = log_binom(n, s) + ones + zeros
        return cls._from_log_weights(n, lw, "binomial", {"p": p}, np.abs(gammaln(n + 1.0)))

    @classmethod
    def poisson(cls, n: int, rate: float) -> "ModelSelectionPrior":
        if not rate > 0:
            raise ValueError("rate must be positive")
        s = np.arange(n + 1, dtype=np.float64)
        lw = s * math.log(rate) - gammaln(s + 1.0)
        return cls._from_log_weights(n, lw, "poisson", {"rate": rate}, np.abs(gammaln(s + 1.0)))

    @classmethod
    def poly_tail(cls, n: int, exponent: float) -> "ModelSelectionPrior":
        """``π(0) ∝ 1`` and ``π(s) ∝ s^{-exponent}`` for ``s >= 1``."""
        if not exponent > 1:
            raise ValueError("exponent must exceed 1")
        s = np.arange(n + 1, dtype=np.float64)
        lw = np.where(s > 0, -exponent * np.log(np.maximum(s, 1.0)), 0.0)
        return cls._from_log_weights(n, lw, "poly-tail", {"exponent": exponent})

    @classmethod
    def sub_exponential(cls, n: int, exponent: float) -> "ModelSelectionPrior":
        """``π(s) ∝ exp(-s^exponent)``."""
        if not exponent > 0:
            raise ValueError("exponent must be positive")
        s = np.arange(n + 1, dtype=np.float64)
        lw = -np.power(s, exponent)
        return cls._from_log_weights(n, lw, "sub-exponential", {"exponent": exponent})

    @classmethod
    def from_weights(cls, weights) -> "ModelSelectionPrior":
        """Normalise nonnegative weights ``w[0..n]``; zeros are allowed."""
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("need at least two weights")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            lw = np.log(w)
        return cls._from_log_weights(w.size - 1, lw, "custom", {})

    @classmethod
    def from_log_weights(cls, log_weights) -> "ModelSelectionPrior":
        lw = np.asarray(log_weights, dtype=np.float64)
        return cls._from_log_weights(lw.size - 1, lw, "custom", {})

    @classmethod
    def point_mass(cls, n: int, s: int) -> "ModelSelectionPrior":
        lw = np.full(n + 1, NEG_INF)
        lw[s] = 0.0
        return cls(n, lw, "point-mass", {"s": s}, np.zeros(n + 1))

    # -- derived -----------------------------------------------------------
    @property
    def pmf(self) -> np.ndarray:
        return np.exp(self.log_pmf)

    @property
    def is_beta_binomial(self) -> bool:
        return self.family == "beta-binomial" and self.params["kappa"] > 0 and self.params["lambda"] > 0

    def log_pattern_prob(self, tracked: bool = False):
        """``ln(π(m) / C(n, m))`` for ``m = 0..n`` (the last row of the v-table)."""
        lc = log_binom(self.n, np.arange(self.n + 1))
        base = self.log_pmf - lc
        if not tracked:
            return base
        err = self.log_err + 16 * _EPS * (np.abs(lc) + abs(float(gammaln(self.n + 1.0))))
        return LogInterval(np.where(np.isneginf(base), base, sub_down(base, err)),
                           np.where(np.isneginf(base), base, add_up(base, err)))

    def inclusion_marginal(self) -> float:
        """Prior probability that a given coordinate is nonzero: ``E[s]/n``."""
        return float(np.sum(self.pmf * np.arange(self.n + 1)) / self.n)


def make_prior(family: str, n: int, **params) -> ModelSelectionPrior:
    """Build a prior from a family name and its parameters."""
    fam = family.lower().replace("_", "-")
    if fam in ("beta-binomial", "betabinomial", "beta"):
        return ModelSelectionPrior.beta_binomial(n, float(params["kappa"]), float(params["lambda"]))
    if fam == "binomial":
        return ModelSelectionPrior.binomial(n, float(params["p"]))
    if fam == "poisson":
        return ModelSelectionPrior.poisson(n, float(params["rate"]))
    if fam in ("poly-tail", "polytail", "polynomial"):
        return ModelSelectionPrior.poly_tail(n, float(params["exponent"]))
    if fam in ("sub-exponential", "subexp"):
        return ModelSelectionPrior.sub_exponential(n, float(params["exponent"]))
    if fam in ("custom", "weights"):
        prior = ModelSelectionPrior.from_weights(params["weights"])
        if prior.n != n:
            raise ValueError(f"weight vector implies n={prior.n}, expected {n}")
        return prior
    raise ValueError(f"unknown prior family {family!r}")


class VTable:
    """Prefix probabilities ``v_i(m)``, ``0 <= m <= i <= n``, in logs.

    Rows are produced by summing neighbouring entries from ``v_n`` downward.
    Only every ``stride``-th row is kept; other rows are rebuilt a block at a
    time on demand, so a monotone sweep over ``i`` (either direction) costs
    ``O(n^2)`` work and ``O(n^1.5)`` memory.
    """

    def __init__(self, prior: ModelSelectionPrior, tracked: bool = False, stride: int | None = None):
        self.prior = prior
        self.n = prior.n
        self.tracked = tracked
        self.stride = stride or max(1, math.isqrt(self.n))
        self._checkpoints: dict[int, object] = {}
        row = prior.log_pattern_prob(tracked)
        for i in range(self.n, -1, -1):
            if i % self.stride == 0 or i == self.n:
                self._checkpoints[i] = row
            if i > 0:
                row = ladd(row[:-1], row[1:])
        self._block_key = None
        self._block: dict[int, object] = {}

    def row(self, i: int):
        """``ln v_i(m)`` for ``m = 0..i``."""
        if not 0 <= i <= self.n:
            raise IndexError(i)
        if i in self._checkpoints:
            return self._checkpoints[i]
        top = min(self.n, (i // self.stride + 1) * self.stride)
        if self._block_key != top:
            block = {}
            row = self._checkpoints[top]
            for j in range(top, top - self.stride, -1):
                block[j] = row
                row = ladd(row[:-1], row[1:])
            self._block, self._block_key = block, top
        return self._block[i]

    def full(self) -> list:
        return [self.row(i) for i in range(self.n + 1)]


def log_transition(prior: ModelSelectionPrior, i: int, vtable: VTable | None = None,
                   tracked: bool = False):
    """Log probabilities of ``B_{i+1} = 0`` and ``B_{i+1} = 1`` given ``M_i = m``.

    Returns two length-``i+1`` arrays (or :class:`LogInterval`) over ``m``.
    States with ``v_i(m) = 0`` get ``-inf`` for both; they are unreachable.
    """
    if not 0 <= i < prior.n:
        raise IndexError(i)
    if prior.is_beta_binomial:
        return _beta_binomial_transition(prior.params["kappa"], prior.params["lambda"], i, tracked)
    if vtable is None:
        vtable = VTable(prior, tracked)
    cur, nxt = vtable.row(i), vtable.row(i + 1)
    return _ratio(nxt[:-1], cur), _ratio(nxt[1:], cur)


def _ratio(num, den):
    if isinstance(num, LogInterval):
        dead = np.isneginf(den.hi)
        if not dead.any():
            return num / den
        if (dead & ~np.isneginf(num.hi)).any():
            raise ArithmeticError("inconsistent prior: positive continuation of an impossible prefix")
        safe = LogInterval(np.where(dead, 0.0, den.lo), np.where(dead, 0.0, den.hi))
        out = num / safe
        return LogInterval(np.where(dead, NEG_INF, out.lo), np.where(dead, NEG_INF, out.hi))
    with np.errstate(invalid="ignore"):
        out = num - den
    dead = np.isneginf(den)
    if (dead & ~np.isneginf(num)).any():
        raise ArithmeticError("inconsistent prior: positive continuation of an impossible prefix")
    return np.where(dead, NEG_INF, out)


def _beta_binomial_transition(kappa: float, lam: float, i: int, tracked: bool):
    m = np.arange(i + 1, dtype=np.float64)
    if not tracked:
        tot = kappa + lam + i
        return np.log((lam + i - m) / tot), np.log((kappa + m) / tot)
    tot_lo, tot_hi = add_down(kappa + lam, float(i)), add_up(kappa + lam, float(i))
    # kappa + lam itself may be inexact
    tot_lo = np.nextafter(tot_lo, -np.inf)
    tot_hi = np.nextafter(tot_hi, np.inf)
    one_lo, one_hi = add_down(kappa, m), add_up(kappa, m)
    zero_lo = add_down(lam, sub_down(float(i), m))
    zero_hi = add_up(lam, sub_up(float(i), m))
    t1 = LogInterval(sub_down(log_down(one_lo), log_up(tot_hi)), sub_up(log_up(one_hi), log_down(tot_lo)))
    t0 = LogInterval(sub_down(log_down(zero_lo), log_up(tot_hi)), sub_up(log_up(zero_hi), log_down(tot_lo)))
    return t0, t1


# ---------------------------------------------------------------------------
# mixing priors on the inclusion weight


@dataclass(frozen=True)
class BetaMixing:
    """``α ~ Beta(kappa, lam)``."""

    kappa: float
    lam: float

    def __post_init__(self):
        if not (self.kappa > 0 and self.lam > 0):
            raise ValueError("Beta parameters must be positive")

    def log_density(self, alpha):
        alpha = np.asarray(alpha, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return ((self.kappa - 1) * np.log(alpha) + (self.lam - 1) * np.log1p(-alpha)
                    - betaln(self.kappa, self.lam))

    def log_pattern_prob(self, n: int) -> np.ndarray:
        """``ln ∫ α^s (1-α)^(n-s) dΛ`` for ``s = 0..n``."""
        s = np.arange(n + 1, dtype=np.float64)
        return betaln(self.kappa + s, self.lam + n - s) - betaln(self.kappa, self.lam)

    def to_model_selection(self, n: int) -> ModelSelectionPrior:
        return ModelSelectionPrior.beta_binomial(n, self.kappa, self.lam)


@dataclass(frozen=True)
class DensityMixing:
    """``α`` with a user supplied density on ``[0, 1]``.

    ``lipschitz`` is an optional constant for the density of the arcsine
    transformed weight; it is reported, never estimated.
    """

    density: Callable[[float], float]
    lipschitz: float | None = None
    points: tuple = ()

    def __post_init__(self):
        total = self._integrate(lambda a: 1.0, 0.0, 1.0)
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"mixing density integrates to {total!r}, not 1")

    def _integrate(self, fn, lo, hi) -> float:
        edges = [lo, *sorted(p for p in self.points if lo < p < hi), hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda t: fn(t) * float(self.density(t)), a, b,
                                    epsabs=1e-14, epsrel=1e-12, limit=2000)
            total += val
        return total

    def mass(self, lo: float, hi: float) -> float:
        return self._integrate(lambda a: 1.0, lo, hi)

    def log_pattern_prob(self, n: int) -> np.ndarray:
        out = np.empty(n + 1)
        for s in range(n + 1):
            # scale by the peak of α^s (1-α)^(n-s) to avoid underflow
            peak = s / n
            with np.errstate(divide="ignore"):
                log_peak = (s * math.log(peak) if s else 0.0) + ((n - s) * math.log1p(-peak) if s < n else 0.0)

            def f(a, s=s, log_peak=log_peak):
                if a <= 0.0:
                    return 1.0 if s == 0 else 0.0
                if a >= 1.0:
                    return 1.0 if s == n else 0.0
                return math.exp(s * math.log(a) + (n - s) * math.log1p(-a) - log_peak)

            val = self._integrate(f, 0.0, 1.0)
            out[s] = math.log(val) + log_peak if val > 0 else NEG_INF
        return out

    def to_model_selection(self, n: int) -> ModelSelectionPrior:
        return ModelSelectionPrior.from_log_weights(log_binom(n, np.arange(n + 1)) + self.log_pattern_prob(n))
