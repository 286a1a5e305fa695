"""Exact posterior inclusion probabilities, means and medians for spike-and-slab priors."""
from .baselines import approx_error, gibbs, vb_componentwise
from .cvdv import q_all_cvdv, q_all_longdiv
from .discretize import epsilon_bound, make_discrete_prior, q_all_discrete
from .estimator import SparseNormalMeans
from .hmm import q_all_hmm
from .lognum import DomainError, LogInterval, LogValue, NumericalError
from .posterior import PosteriorSummary, compute, compute_general, marginal_cdf, marginal_median
from .priors import BetaMixing, DensityMixing, ModelSelectionPrior, make_prior
from .representability import is_spike_slab
from .slabs import CauchySlab, CustomSlab, GaussianSlab, LaplaceSlab, make_slab

__version__ = "0.1.0"

__all__ = [
    "BetaMixing", "CauchySlab", "CustomSlab", "DensityMixing", "DomainError", "GaussianSlab", "LaplaceSlab",
    "LogInterval", "LogValue", "ModelSelectionPrior", "NumericalError", "PosteriorSummary", "SparseNormalMeans",
    "approx_error", "compute", "compute_general", "epsilon_bound", "gibbs", "is_spike_slab", "make_discrete_prior",
    "make_prior", "make_slab", "marginal_cdf", "marginal_median", "q_all_cvdv", "q_all_discrete", "q_all_hmm",
    "q_all_longdiv", "vb_componentwise",
]
