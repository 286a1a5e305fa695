"""Marginal posterior summaries for the sparse normal means model.

``Y_i = θ_i + noise`` with standard normal noise; ``θ_i`` is zero or drawn
from a slab.  Given inclusion probabilities ``q_i`` the posterior of each
``θ_i`` is a point mass ``1 - q_i`` at zero plus ``q_i`` times the slab
posterior, which yields means, medians, quantiles and CDF values.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cvdv import q_all_cvdv, q_all_longdiv
from .discretize import DEFAULT_M, EpsilonBound, epsilon_bound, make_discrete_prior, q_all_discrete
from .hmm import q_all_hmm
from .inclusion import InclusionProbs
from .lognum import NEG_INF, POS_INF, LogInterval
from .priors import BetaMixing, DensityMixing, ModelSelectionPrior
from .slabs import SPIKE_LOG_TOL, Slab, log_phi

ALGORITHMS = ("cvdv", "longdiv", "hmm", "discrete")
SELECTION_THRESHOLD = 0.5
# grid error bound is reported up to this many coordinates (it costs O(n k))
EPSILON_MAX_N = 20_000


@dataclass
class PosteriorSummary:
    y: np.ndarray
    q: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    selected: np.ndarray
    log_marginal: float
    algorithm: str
    runtime: float
    threshold: float = SELECTION_THRESHOLD
    log_marginal_bounds: tuple | None = None
    epsilon: EpsilonBound | None = None
    slab: Slab | None = field(default=None, repr=False)
    # time spent on the grid error certificate; not part of ``runtime``
    certificate_runtime: float = 0.0

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def max_width(self) -> float:
        return float(np.max(self.q_hi - self.q_lo)) if self.n else 0.0

    def cdf(self, i: int, u: float) -> float:
        return marginal_cdf(self.q[i], self.y[i], self.slab, u)

    def quantile(self, p: float, i: int) -> float:
        return marginal_quantile(self.q[i], self.y[i], self.slab, p)


def marginal_cdf(q: float, y: float, slab: Slab, u: float) -> float:
    """``P(θ <= u | Y)``: atom ``1 - q`` at zero plus ``q`` times the slab posterior."""
    atom = (1.0 - q) if u >= 0 else 0.0
    if q == 0:
        return atom
    return atom + q * slab.cdf(float(y), float(u))


def marginal_median(q: float, y: float, slab: Slab) -> float:
    """Posterior median; zero whenever ``q <= 1/2``."""
    if q <= 0.5:
        return 0.0
    left = min(slab.h_inverse(float(y), 1.0 / (2.0 * q)), 0.0)
    right = max(slab.h_inverse(float(y), 1.0 - 1.0 / (2.0 * q)), 0.0)
    return left + right


def marginal_quantile(q: float, y: float, slab: Slab, p: float) -> float:
    """Generalised inverse of :func:`marginal_cdf` at level ``p``."""
    if p <= 0:
        return NEG_INF
    if p >= 1:
        return POS_INF
    if q == 0:
        return 0.0
    below = q * slab.cdf(float(y), 0.0)
    if p <= below:
        return slab.h_inverse(float(y), p / q)
    if p <= below + (1.0 - q):
        return 0.0
    return slab.h_inverse(float(y), (p - (1.0 - q)) / q)


def likelihoods(slab: Slab, y, tracked: bool = False):
    """``(log ψ(y_i), log φ(y_i))``, as intervals when ``tracked``."""
    y = np.asarray(y, dtype=np.float64)
    lps = np.asarray(slab.log_psi(y), dtype=np.float64)
    lph = log_phi(y)
    if not tracked:
        return lps, lph
    return (LogInterval.around(lps, slab.log_tol * np.maximum(1.0, np.abs(lps))),
            LogInterval.around(lph, SPIKE_LOG_TOL * np.maximum(1.0, np.abs(lph))))


def _mixing_for(prior: ModelSelectionPrior, mixing):
    if mixing is not None:
        return mixing
    if prior.is_beta_binomial:
        return BetaMixing(prior.params["kappa"], prior.params["lambda"])
    raise ValueError("the grid algorithm needs a spike-and-slab prior (Beta or density mixing)")


def inclusion_probabilities(prior: ModelSelectionPrior, log_psi, log_phi, algorithm: str = "hmm",
                            tracked: bool = False, m: int = DEFAULT_M, mixing=None,
                            longdiv_variant: str = "first", certify: bool = True):
    """Dispatch to one of the algorithms; returns ``(InclusionProbs, EpsilonBound | None)``.

    ``certify=False`` skips the grid error bound for the discrete algorithm;
    see :func:`discrete_certificate`.
    """
    n = len(log_psi)
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    if prior.n != n:
        raise ValueError(f"prior is for n={prior.n}, data has {n} coordinates")
    if algorithm == "discrete":
        if tracked:
            raise ValueError("the grid algorithm has no tracked mode; its error is reported as epsilon")
        mix = _mixing_for(prior, mixing)
        dprior = make_discrete_prior(n, mix, m)
        res = q_all_discrete(dprior, _point(log_psi), _point(log_phi))
        return res, (_certificate(dprior, mix, n) if certify else None)
    if algorithm == "longdiv":
        return q_all_longdiv(prior, _interval(log_psi), _interval(log_phi), longdiv_variant), None
    fn = q_all_cvdv if algorithm == "cvdv" else q_all_hmm
    return fn(prior, log_psi, log_phi), None


def _certificate(dprior, mix, n):
    if n <= EPSILON_MAX_N and isinstance(mix, (BetaMixing, DensityMixing)):
        return epsilon_bound(dprior, n)
    return None


def discrete_certificate(prior: ModelSelectionPrior, m: int = DEFAULT_M, mixing=None) -> EpsilonBound | None:
    """Grid error bound for the discrete algorithm, or ``None`` above ``EPSILON_MAX_N``."""
    mix = _mixing_for(prior, mixing)
    return _certificate(make_discrete_prior(prior.n, mix, m), mix, prior.n)


def _point(x):
    return x.mid if isinstance(x, LogInterval) else np.asarray(x, dtype=np.float64)


def _interval(x):
    if isinstance(x, LogInterval):
        return x
    x = np.asarray(x, dtype=np.float64)
    return LogInterval.around(x, SPIKE_LOG_TOL * np.maximum(1.0, np.abs(x)))


def compute(prior: ModelSelectionPrior, slab: Slab, y, algorithm: str = "hmm", tracked: bool = False,
            m: int = DEFAULT_M, threshold: float = SELECTION_THRESHOLD, mixing=None,
            medians: bool = True) -> PosteriorSummary:
    """Full marginal summary for data ``y``."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty vector")
    if not np.isfinite(y).all():
        raise ValueError("y must be finite")
    start = time.perf_counter()
    track_inputs = tracked or algorithm == "longdiv"
    lps, lph = likelihoods(slab, y, track_inputs)
    res, _ = inclusion_probabilities(prior, lps, lph, algorithm, tracked, m, mixing, certify=False)
    runtime = time.perf_counter() - start
    # the certificate costs O(n k), more than the algorithm itself, and only
    # exists below EPSILON_MAX_N; timing it would bend runtime-vs-n curves
    eps, cert_time = None, 0.0
    if algorithm == "discrete":
        start = time.perf_counter()
        eps = discrete_certificate(prior, m, mixing)
        cert_time = time.perf_counter() - start
    summary = _summarise(res, eps, y, slab, threshold, runtime, medians)
    summary.certificate_runtime = cert_time
    return summary


def _summarise(res: InclusionProbs, eps, y, slab, threshold, runtime, medians=True) -> PosteriorSummary:
    q = res.q
    if slab is not None:
        mean = q * slab.posterior_mean(y)
        med = np.array([marginal_median(qi, yi, slab) for qi, yi in zip(q, y)]) if medians else np.full(q.size, np.nan)
    else:
        mean = np.full(q.size, np.nan)
        med = np.full(q.size, np.nan)
    return PosteriorSummary(
        y=y, q=q, q_lo=res.lower, q_hi=res.upper, mean=mean, median=med,
        selected=q >= threshold, log_marginal=res.log_marginal, algorithm=res.algorithm,
        runtime=runtime, threshold=threshold, log_marginal_bounds=res.log_marginal_bounds,
        epsilon=eps, slab=slab,
    )


def compute_general(prior: ModelSelectionPrior, log_phi_values, log_psi_values, algorithm: str = "hmm",
                    tracked: bool = False, m: int = DEFAULT_M, mixing=None) -> InclusionProbs:
    """Inclusion probabilities from arbitrary per-coordinate spike and slab densities.

    Inputs are logs of the density values; they must be finite (densities
    strictly positive).
    """
    lph = np.asarray(log_phi_values, dtype=np.float64)
    lps = np.asarray(log_psi_values, dtype=np.float64)
    if lph.shape != lps.shape or lph.ndim != 1:
        raise ValueError("spike and slab values must be vectors of equal length")
    if not (np.isfinite(lph).all() and np.isfinite(lps).all()):
        raise ValueError("density values must be strictly positive and finite")
    if tracked:
        eps = np.finfo(np.float64).eps
        lps_in = LogInterval.around(lps, 4 * eps * np.maximum(1.0, np.abs(lps)))
        lph_in = LogInterval.around(lph, 4 * eps * np.maximum(1.0, np.abs(lph)))
    else:
        lps_in, lph_in = lps, lph
    res, _ = inclusion_probabilities(prior, lps_in, lph_in, algorithm, tracked, m, mixing)
    return res


def marginal_likelihood(prior: ModelSelectionPrior, slab: Slab, y, algorithm: str = "hmm") -> float:
    """``ln p(Y)`` for noise variance one; callers may grid over a rescaled ``Y``."""
    lps, lph = likelihoods(slab, y)
    res, _ = inclusion_probabilities(prior, lps, lph, algorithm)
    return res.log_marginal
