import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsparse.cvdv import LONGDIV_VARIANTS, marginal_likelihood, poly_coeffs, q_all_cvdv, q_all_longdiv
from exactsparse.lognum import LogInterval
from exactsparse.priors import ModelSelectionPrior
from helpers import assert_contains, inputs, sparse_sample
from oracle import brute_force_q


def test_poly_coeffs_example():
    # (2Z + 3)(Z + 5) = 2Z^2 + 13Z + 15
    c = poly_coeffs(np.log([2.0, 1.0]), np.log([3.0, 5.0]))
    assert np.allclose(np.exp(c), [15.0, 13.0, 2.0], rtol=1e-15)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3)), min_size=1, max_size=12))
def test_poly_coeffs_sum_is_product_at_one(pairs):
    a, b = np.array(pairs).T
    c = poly_coeffs(np.log(a), np.log(b))
    assert math.exp(np.logaddexp.reduce(c)) == pytest.approx(float(np.prod(a + b)), rel=1e-12)


def test_poly_coeffs_length_mismatch():
    with pytest.raises(ValueError):
        poly_coeffs(np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("n", [1, 2, 5, 9, 14])
def test_cvdv_matches_oracle(n, rng):
    y = sparse_sample(rng, n)
    lps, lph = inputs(y)
    prior = ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0)
    q_exact, logz = brute_force_q(prior.log_pmf, lps, lph)
    res = q_all_cvdv(prior, lps, lph)
    assert np.max(np.abs(res.q - np.array([float(v) for v in q_exact]))) <= 1e-12
    assert res.log_marginal == pytest.approx(float(logz), abs=1e-12)
    assert float(marginal_likelihood(prior, lps, lph)) == pytest.approx(float(logz), abs=1e-12)


def test_single_coordinate_closed_form():
    prior = ModelSelectionPrior.binomial(1, 0.3)
    lps, lph = inputs([2.0])
    res = q_all_cvdv(prior, lps, lph)
    a, b = 0.3 * math.exp(lps[0]), 0.7 * math.exp(lph[0])
    assert res.q[0] == pytest.approx(a / (a + b), rel=1e-14)


def test_point_mass_priors(rng):
    y = sparse_sample(rng, 6)
    lps, lph = inputs(y)
    assert np.all(q_all_cvdv(ModelSelectionPrior.point_mass(6, 0), lps, lph).q == 0)
    assert np.allclose(q_all_cvdv(ModelSelectionPrior.point_mass(6, 6), lps, lph).q, 1.0, atol=1e-15)
    q = q_all_cvdv(ModelSelectionPrior.point_mass(6, 2), lps, lph).q
    assert q.sum() == pytest.approx(2.0, abs=1e-13)


def test_permutation_equivariance(rng):
    n = 40
    y = sparse_sample(rng, n)
    lps, lph = inputs(y)
    prior = ModelSelectionPrior.poisson(n, 5.0)
    perm = rng.permutation(n)
    q = q_all_cvdv(prior, lps, lph).q
    qp = q_all_cvdv(prior, lps[perm], lph[perm]).q
    assert np.max(np.abs(q[perm] - qp)) <= 1e-13


@pytest.mark.parametrize("prior_kind", ["beta", "poisson", "poly"])
def test_tracked_cvdv_contains_oracle(prior_kind, rng):
    n = 10
    prior = {"beta": ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0),
             "poisson": ModelSelectionPrior.poisson(n, 2.0),
             "poly": ModelSelectionPrior.poly_tail(n, 2.0)}[prior_kind]
    y = sparse_sample(rng, n)
    lps, lph = inputs(y)
    res = q_all_cvdv(prior, LogInterval.point(lps), LogInterval.point(lph))
    q_exact, logz = brute_force_q(prior.log_pmf, lps, lph)
    assert_contains(res, q_exact)
    lo, hi = res.log_marginal_bounds
    assert lo <= float(logz) <= hi
    assert res.max_width < 1e-10


def test_longdiv_single_coordinate_is_tight():
    prior = ModelSelectionPrior.binomial(1, 0.5)
    lps, lph = inputs([1.0])
    res = q_all_longdiv(prior, lps, lph)
    assert res.max_width < 1e-13


@pytest.mark.parametrize("variant", LONGDIV_VARIANTS)
def test_longdiv_contains_oracle(variant, rng):
    n = 12
    prior = ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0)
    y = sparse_sample(rng, n)
    lps, lph = inputs(y)
    res = q_all_longdiv(prior, lps, lph, variant)
    assert res.tracked
    q_exact, _ = brute_force_q(prior.log_pmf, lps, lph)
    assert_contains(res, q_exact)
    assert res.algorithm == f"longdiv-{variant}"


def test_longdiv_bad_variant():
    with pytest.raises(ValueError):
        q_all_longdiv(ModelSelectionPrior.binomial(1, 0.5), np.zeros(1), np.zeros(1), "random")


def test_size_mismatch():
    with pytest.raises(ValueError):
        q_all_cvdv(ModelSelectionPrior.binomial(3, 0.5), np.zeros(2), np.zeros(2))
