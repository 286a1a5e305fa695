"""scikit-learn style wrapper around :func:`exactsparse.posterior.compute`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_observations, check_positive_int, check_probability
from .discretize import DEFAULT_M
from .posterior import ALGORITHMS, SELECTION_THRESHOLD, compute
from .priors import ModelSelectionPrior, make_prior
from .slabs import Slab, make_slab


class SparseNormalMeans(BaseEstimator, TransformerMixin):
    """Exact spike-and-slab posterior for ``Y_i = θ_i + N(0, 1)``.

    ``fit`` takes the observation vector (or an ``(n, 1)`` column).  The
    prior is rebuilt for each ``n`` from ``prior`` and ``prior_params``; the
    defaults give the beta-binomial prior with ``κ = 1`` and ``λ = n + 1``.
    ``transform`` returns posterior means and ``predict`` the selection
    flags.
    """

    def __init__(self, prior="beta-binomial", prior_params=None, slab="laplace", slab_param=None,
                 algorithm="hmm", m=DEFAULT_M, tracked=False, threshold=SELECTION_THRESHOLD,
                 compute_medians=True):
        self.prior = prior
        self.prior_params = prior_params
        self.slab = slab
        self.slab_param = slab_param
        self.algorithm = algorithm
        self.m = m
        self.tracked = tracked
        self.threshold = threshold
        self.compute_medians = compute_medians

    def _build_prior(self, n: int) -> ModelSelectionPrior:
        if isinstance(self.prior, ModelSelectionPrior):
            if self.prior.n != n:
                raise ValueError(f"prior is for n={self.prior.n}, data has {n} coordinates")
            return self.prior
        params = dict(self.prior_params) if self.prior_params else {}
        if self.prior in ("beta-binomial", "beta_binomial") and not params:
            params = {"kappa": 1.0, "lambda": n + 1.0}
        params = {k: (v(n) if callable(v) else v) for k, v in params.items()}
        return make_prior(self.prior, n, **params)

    def _build_slab(self) -> Slab:
        if isinstance(self.slab, Slab):
            return self.slab
        return make_slab(self.slab, self.slab_param)

    def fit(self, X, y=None):
        obs = as_observations(X)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        check_positive_int("m", self.m)
        check_probability("threshold", self.threshold)
        summary = compute(self._build_prior(obs.size), self._build_slab(), obs, self.algorithm,
                          tracked=self.tracked, m=self.m, threshold=self.threshold,
                          medians=self.compute_medians)
        self.summary_ = summary
        self.inclusion_prob_ = summary.q
        self.inclusion_bounds_ = np.column_stack([summary.q_lo, summary.q_hi])
        self.posterior_mean_ = summary.mean
        self.posterior_median_ = summary.median
        self.selected_ = summary.selected
        self.log_marginal_ = summary.log_marginal
        self.n_features_in_ = 1
        self.n_coordinates_ = obs.size
        return self

    def _check_same_data(self, X):
        check_is_fitted(self, "summary_")
        obs = as_observations(X)
        if obs.size != self.n_coordinates_ or not np.array_equal(obs, self.summary_.y):
            raise ValueError("posterior summaries refer to the fitted observations; call fit on the new data")

    def transform(self, X):
        self._check_same_data(X)
        return self.posterior_mean_.copy()

    def predict(self, X):
        self._check_same_data(X)
        return self.selected_.copy()

    def predict_proba(self, X):
        self._check_same_data(X)
        return np.column_stack([1.0 - self.inclusion_prob_, self.inclusion_prob_])
