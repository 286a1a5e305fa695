import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betaln, gammaln

from exactsparse.priors import ModelSelectionPrior
from exactsparse.representability import (
    check_at,
    first_negative_minor,
    hankel,
    is_spike_slab,
    leading_minors,
    moment_vector,
)


def test_hankel_examples():
    assert np.array_equal(hankel([1.0, 0.0, 0.0], 1), [[1.0, 0.0], [0.0, 0.0]])
    mu = np.arange(1.0, 8.0)
    h = hankel(mu, 3)
    assert np.array_equal(h, h.T)
    hf = hankel(mu[1:], 2)
    for i in range(3):
        for j in range(3):
            assert hf[i, j] == mu[i + j + 1]
    with pytest.raises(ValueError):
        hankel([1.0, 2.0], 1)


def test_binomial_half_example():
    p = 0.5
    prior = ModelSelectionPrior.binomial(3, p)
    res = check_at(prior, p ** 3)
    assert res.passed, res.margins


def test_binomial_one_at_zero():
    # every pattern but the last has zero probability; all matrices vanish at c = 0
    lw = np.full(4, -np.inf)
    lw[3] = 0.0
    prior = ModelSelectionPrior(3, lw)
    assert check_at(prior, 0.0).passed


def test_poly_tail_minor_formula():
    n, lam = 10, 2.0
    prior = ModelSelectionPrior.poly_tail(n, lam)
    z = 1.0 + sum(s ** -lam for s in range(1, n + 1))
    expect = (2 ** (1 - lam) / (n * (n - 1)) - 1 / n ** 2) / z ** 2
    for c in (0.0, 0.5 * math.exp(prior.log_pmf[-1]), math.exp(prior.log_pmf[-1])):
        h = hankel(moment_vector(prior, c), n // 2)
        assert leading_minors(h)[1] == pytest.approx(expect, rel=1e-10)
        assert expect < 0
        assert first_negative_minor(h) == 2
        assert not check_at(prior, c).passed


@pytest.mark.parametrize("n", range(3, 13))
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_binomial_representable(n, p):
    verdict = is_spike_slab(ModelSelectionPrior.binomial(n, p))
    assert verdict.representable
    assert check_at(ModelSelectionPrior.binomial(n, p), verdict.witness_c).passed


@pytest.mark.parametrize("n", range(3, 13))
def test_poisson_representable(n):
    assert is_spike_slab(ModelSelectionPrior.poisson(n, 1.0)).representable


def test_sub_exponential_not_representable():
    verdict = is_spike_slab(ModelSelectionPrior.sub_exponential(10, 2.0))
    assert not verdict.representable
    assert verdict.witness_c is None
    assert verdict.violated


@pytest.mark.parametrize("lam", [2.0, 3.0])
def test_poly_tail_threshold(lam):
    threshold = 2 ** (lam - 1) / (2 ** (lam - 1) - 1)
    for n in range(1, 13):
        verdict = is_spike_slab(ModelSelectionPrior.poly_tail(n, lam))
        assert verdict.representable == (n <= threshold), n


@settings(max_examples=25)
@given(st.floats(0.5, 5.0), st.floats(0.5, 5.0), st.integers(1, 12))
def test_beta_mixtures_round_trip(kappa, lam, n):
    s = np.arange(n + 1)
    lw = gammaln(n + 1.0) - gammaln(s + 1.0) - gammaln(n - s + 1.0) + betaln(kappa + s, lam + n - s) - betaln(kappa, lam)
    verdict = is_spike_slab(ModelSelectionPrior.from_log_weights(lw), grid_size=201)
    assert verdict.representable, verdict.to_dict()


def test_verdict_serialises():
    d = is_spike_slab(ModelSelectionPrior.poisson(4, 1.0), grid_size=11).to_dict()
    assert d["representable"] is True
    assert set(d["margins"]) == {"hankel", "shifted_hankel", "range"}
    with pytest.raises(ValueError):
        is_spike_slab(ModelSelectionPrior.poisson(4, 1.0), grid_size=1)
