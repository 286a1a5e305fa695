"""Shared result container for the inclusion-probability algorithms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lognum import LogInterval, as_interval, exp_down, exp_up, posterior_odds_to_prob, sub_down, sub_up


@dataclass
class InclusionProbs:
    """Posterior inclusion probabilities ``q_i`` with optional rigorous bounds.

    Without tracking ``lower`` and ``upper`` equal ``q``.
    """

    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    log_marginal: float
    log_marginal_bounds: tuple[float, float] | None = None
    algorithm: str = ""
    partial: bool = False

    @property
    def tracked(self) -> bool:
        return self.log_marginal_bounds is not None

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def max_width(self) -> float:
        return float(np.max(self.width)) if self.q.size else 0.0


def from_odds(log_one, log_zero, log_marginal, algorithm: str) -> InclusionProbs:
    """Build the result from the two joint masses ``p(Y, B_i = 1)``, ``p(Y, B_i = 0)``."""
    q, lo, hi = posterior_odds_to_prob(log_one, log_zero)
    return _finish(q, lo, hi, log_marginal, algorithm,
                   getattr(log_one, "partial", False) or getattr(log_zero, "partial", False))


def from_ratio(log_one, log_marginal, algorithm: str) -> InclusionProbs:
    """Build the result from ``p(Y, B_i = 1)`` and the marginal likelihood."""
    if isinstance(log_one, LogInterval) or isinstance(log_marginal, LogInterval):
        num, den = as_interval(log_one), as_interval(log_marginal)
        lo = np.clip(exp_down(sub_down(num.lo, den.hi)), 0.0, 1.0)
        hi = np.clip(exp_up(sub_up(num.hi, den.lo)), 0.0, 1.0)
        q = np.clip(np.exp(0.5 * (num.lo + num.hi) - 0.5 * (den.lo + den.hi)), lo, hi)
        q = np.where(np.isfinite(q), q, 0.5 * (lo + hi))
        return _finish(q, lo, hi, log_marginal, algorithm, num.partial or den.partial)
    q = np.clip(np.exp(np.asarray(log_one) - log_marginal), 0.0, 1.0)
    return _finish(q, q, q, log_marginal, algorithm, False)


def _finish(q, lo, hi, log_marginal, algorithm, partial) -> InclusionProbs:
    if isinstance(log_marginal, LogInterval):
        bounds = (float(log_marginal.lo), float(log_marginal.hi))
        point = float(log_marginal.mid)
    else:
        bounds, point = None, float(log_marginal)
    q = np.asarray(q, dtype=np.float64)
    if bounds is None:
        lo = hi = q
    return InclusionProbs(q, np.asarray(lo, float), np.asarray(hi, float), point, bounds,
                          algorithm, bool(partial))
