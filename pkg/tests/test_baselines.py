import numpy as np
import pytest

from exactsparse.baselines import (
    GibbsConfig,
    approx_error,
    gibbs,
    make_rng,
    vb_componentwise,
)
from exactsparse.posterior import compute
from exactsparse.priors import ModelSelectionPrior
from exactsparse.slabs import GaussianSlab, LaplaceSlab, log_phi
from helpers import sparse_sample
from oracle import fixed_alpha_q


def test_config_validation():
    assert GibbsConfig(10).burn_in == 5
    assert GibbsConfig(11).burn_in < 11
    with pytest.raises(ValueError):
        GibbsConfig(1)
    with pytest.raises(ValueError):
        GibbsConfig(10, seed=-1)
    with pytest.raises(ValueError):
        GibbsConfig(10, seed=2 ** 64)


def test_rng_is_philox():
    assert isinstance(make_rng(3).bit_generator, np.random.Philox)
    assert make_rng(3).random() == make_rng(3).random()


def test_gibbs_deterministic(rng):
    y = sparse_sample(rng, 100)
    a = gibbs(y, 1.0, 101.0, cfg=GibbsConfig(2000, seed=42))
    b = gibbs(y, 1.0, 101.0, cfg=GibbsConfig(2000, seed=42))
    c = gibbs(y, 1.0, 101.0, cfg=GibbsConfig(2000, seed=43))
    assert np.array_equal(a.q, b.q)
    assert not np.array_equal(a.q, c.q)
    assert np.all((a.q >= 0) & (a.q <= 1))
    assert a.config["generator"] == "philox" and a.config["seed"] == 42


def test_gibbs_fixed_alpha_limit(rng):
    alpha, scale = 0.3, 1e9
    y = sparse_sample(rng, 10, s=3, signal=2.0)
    slab = GaussianSlab(1.0)
    res = gibbs(y, alpha * scale, (1 - alpha) * scale, slab, GibbsConfig(40_000, seed=7))
    exact = np.array([float(v) for v in fixed_alpha_q(alpha, slab.log_psi(y), log_phi(y))])
    # 20 000 kept draws: standard error at most 0.0036 per coordinate
    assert approx_error(exact, res.q) < 0.02


def test_gibbs_rejects_bad_prior():
    with pytest.raises(ValueError):
        gibbs([1.0], 0.0, 1.0)


def test_vb_fixed_odds_equals_fixed_alpha_posterior(rng):
    y = sparse_sample(rng, 40)
    kappa, lam = 2.0, 5.0
    for v in (0.5, 1.0, 4.0):
        slab = GaussianSlab(v)
        res = vb_componentwise(y, kappa, lam, slab)
        exact = np.array([float(x) for x in fixed_alpha_q(kappa / (kappa + lam), slab.log_psi(y), log_phi(y))])
        assert approx_error(exact, res.q) < 1e-12
        assert res.converged


@pytest.mark.parametrize("hyper", ["fixed-odds", "mean-field"])
def test_vb_elbo_monotone_and_deterministic(hyper, rng):
    y = sparse_sample(rng, 200)
    a = vb_componentwise(y, 1.0, 201.0, hyper=hyper)
    b = vb_componentwise(y, 1.0, 201.0, hyper=hyper)
    assert np.array_equal(a.q, b.q)
    assert np.all(np.diff(a.trace) >= -1e-10)
    assert a.converged
    assert a.config["hyper"] == hyper


def test_vb_mean_field_close_to_exact(rng):
    n = 200
    y = sparse_sample(rng, n)
    slab = GaussianSlab(1.0)
    exact = compute(ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0), slab, y, medians=False).q
    assert approx_error(exact, vb_componentwise(y, 1.0, n + 1.0, slab, hyper="mean-field").q) < 0.05


def test_vb_non_convergence_is_flagged(rng):
    y = sparse_sample(rng, 50)
    res = vb_componentwise(y, 1.0, 51.0, hyper="mean-field", tol=0.0, max_iter=3)
    assert not res.converged
    assert len(res.trace) == 4


def test_vb_errors():
    with pytest.raises(TypeError):
        vb_componentwise([1.0], 1.0, 1.0, LaplaceSlab(1.0))
    with pytest.raises(ValueError):
        vb_componentwise([1.0], 1.0, 1.0, hyper="full")
    with pytest.raises(ValueError):
        vb_componentwise([1.0], -1.0, 1.0)


def test_approx_error_examples():
    assert approx_error([0.2, 0.4], [0.2, 0.4]) == 0.0
    assert approx_error([0.0, 1.0], [1.0, 0.0]) == 1.0
    assert approx_error([], []) == 0.0
    with pytest.raises(ValueError):
        approx_error([0.1], [0.1, 0.2])


def test_gibbs_error_shrinks_with_iterations(rng):
    n = 1000
    slab = GaussianSlab(1.0)
    y = sparse_sample(rng, n, s=200, signal=4 * np.sqrt(2 * np.log(n)))
    exact = compute(ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0), slab, y, medians=False).q
    short = np.mean([approx_error(exact, gibbs(y, 1.0, n + 1.0, slab, GibbsConfig(1_000, s)).q) for s in range(5)])
    long = np.mean([approx_error(exact, gibbs(y, 1.0, n + 1.0, slab, GibbsConfig(100_000, s)).q) for s in range(5)])
    assert long < short
