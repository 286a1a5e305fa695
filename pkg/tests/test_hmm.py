import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import exactsparse.hmm as hmm
from exactsparse.cvdv import q_all_cvdv
from exactsparse.hmm import backward_pass, forward_pass, q_all_hmm, state_posteriors
from exactsparse.lognum import LogInterval
from exactsparse.priors import ModelSelectionPrior
from helpers import assert_contains, inputs, sparse_sample
from oracle import brute_force_q

PRIORS = {
    "beta": lambda n: ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0),
    "poisson": lambda n: ModelSelectionPrior.poisson(n, 3.0),
    "binomial": lambda n: ModelSelectionPrior.binomial(n, 0.2),
    "poly": lambda n: ModelSelectionPrior.poly_tail(n, 2.5),
}


@pytest.mark.parametrize("kind", sorted(PRIORS))
@pytest.mark.parametrize("n", [1, 3, 8, 13])
def test_hmm_matches_oracle(kind, n, rng):
    prior = PRIORS[kind](n)
    y = sparse_sample(rng, n)
    lps, lph = inputs(y)
    q_exact, logz = brute_force_q(prior.log_pmf, lps, lph)
    res = q_all_hmm(prior, lps, lph)
    assert np.max(np.abs(res.q - np.array([float(v) for v in q_exact]))) <= 1e-12
    assert res.log_marginal == pytest.approx(float(logz), abs=1e-12)


def test_marginal_agrees_with_cvdv(rng):
    n = 150
    prior = ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0)
    lps, lph = inputs(sparse_sample(rng, n))
    a, b = q_all_hmm(prior, lps, lph), q_all_cvdv(prior, lps, lph)
    assert a.log_marginal == pytest.approx(b.log_marginal, abs=1e-10)
    assert np.max(np.abs(a.q - b.q)) <= 1e-10


def test_backward_examples():
    prior = ModelSelectionPrior.beta_binomial(2, 1.0, 1.0)
    lps, lph = np.log([2.0, 3.0]), np.log([5.0, 7.0])
    g = backward_pass(prior, lps, lph)
    assert np.all(g[2] == 0.0)
    # after one coordinate with M_1 = 0 the next is a one with probability 1/3
    assert math.exp(g[1][0]) == pytest.approx(2 / 3 * 7 + 1 / 3 * 3, rel=1e-14)
    assert math.exp(g[1][1]) == pytest.approx(1 / 3 * 7 + 2 / 3 * 3, rel=1e-14)
    # G_0 is the whole marginal likelihood
    _, logz = forward_pass(prior, lps, lph)
    assert float(g[0][0]) == pytest.approx(float(logz), abs=1e-14)


def test_forward_backward_product_is_constant(rng):
    n = 12
    prior = ModelSelectionPrior.poisson(n, 2.0)
    lps, lph = inputs(sparse_sample(rng, n))
    fwd, logz = forward_pass(prior, lps, lph)
    bwd = backward_pass(prior, lps, lph)
    for i in range(n + 1):
        f = np.logaddexp.reduce(np.asarray(fwd[i]), axis=0)
        total = np.logaddexp.reduce(f + np.asarray(bwd[i]))
        assert total == pytest.approx(float(logz), abs=1e-12)


def test_state_posteriors_normalised(rng):
    n = 9
    prior = ModelSelectionPrior.beta_binomial(n, 0.5, 2.0)
    lps, lph = inputs(sparse_sample(rng, n))
    post = state_posteriors(prior, lps, lph)
    q = q_all_hmm(prior, lps, lph).q
    for i, p in enumerate(post):
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p[1].sum() == pytest.approx(q[i], abs=1e-12)


@settings(max_examples=20)
@given(st.integers(2, 30), st.integers(0, 2 ** 32 - 1))
def test_marginal_invariant_under_permutation(n, seed):
    rng = np.random.default_rng(seed)
    prior = ModelSelectionPrior.poisson(n, 2.0)
    lps, lph = inputs(sparse_sample(rng, n))
    perm = rng.permutation(n)
    a = q_all_hmm(prior, lps, lph)
    b = q_all_hmm(prior, lps[perm], lph[perm])
    assert b.log_marginal == pytest.approx(a.log_marginal, abs=1e-11)
    assert np.max(np.abs(a.q[perm] - b.q)) <= 1e-11


def test_equal_inputs_give_equal_probabilities():
    n = 25
    lps, lph = inputs(np.full(n, 2.5))
    q = q_all_hmm(ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0), lps, lph).q
    assert np.ptp(q) <= 1e-13


def test_sign_symmetry():
    y = np.array([3.0, -3.0, 0.5])
    q = q_all_hmm(ModelSelectionPrior.beta_binomial(3, 1.0, 4.0), *inputs(y)).q
    assert q[0] == pytest.approx(q[1], abs=1e-15)


@pytest.mark.parametrize("kind", ["beta", "poisson"])
def test_tracked_fast_and_generic_paths_contain_oracle(kind, rng):
    n = 11
    prior = PRIORS[kind](n)
    lps, lph = inputs(sparse_sample(rng, n))
    q_exact, logz = brute_force_q(prior.log_pmf, lps, lph)
    args = (prior, LogInterval.point(lps), LogInterval.point(lph))
    fast = q_all_hmm(*args)
    generic = q_all_hmm(*args, generic=True)
    for res in (fast, generic):
        assert_contains(res, q_exact)
        lo, hi = res.log_marginal_bounds
        assert lo <= float(logz) <= hi
        assert res.max_width < 1e-10
    assert np.max(np.abs(fast.q - generic.q)) <= 1e-12


@pytest.mark.parametrize("stride", [1, 2, 5, None])
def test_checkpointing_matches_full_trellis(stride, rng, monkeypatch):
    n = 37
    prior = ModelSelectionPrior.poisson(n, 4.0)
    lps, lph = inputs(sparse_sample(rng, n))
    full = q_all_hmm(prior, lps, lph)
    monkeypatch.setattr(hmm, "FULL_TRELLIS_BYTES", 0)
    ck = q_all_hmm(prior, lps, lph, stride=stride)
    assert np.array_equal(ck.q, full.q)
    assert ck.log_marginal == full.log_marginal
    tracked_full = q_all_hmm(prior, LogInterval.point(lps), LogInterval.point(lph))
    monkeypatch.undo()
    tracked_ref = q_all_hmm(prior, LogInterval.point(lps), LogInterval.point(lph))
    assert np.array_equal(tracked_full.lower, tracked_ref.lower)
    assert np.array_equal(tracked_full.upper, tracked_ref.upper)


def test_size_mismatch():
    with pytest.raises(ValueError):
        q_all_hmm(ModelSelectionPrior.poisson(3, 1.0), np.zeros(2), np.zeros(2))
