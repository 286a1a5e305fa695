import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betaln

from exactsparse.lognum import LogInterval
from exactsparse.priors import (
    BetaMixing,
    DensityMixing,
    ModelSelectionPrior,
    VTable,
    log_binom,
    log_transition,
    make_prior,
)


def test_beta_binomial_uniform_is_flat():
    prior = ModelSelectionPrior.beta_binomial(2, 1.0, 1.0)
    assert np.allclose(prior.pmf, [1 / 3, 1 / 3, 1 / 3], rtol=0, atol=1e-15)


def test_binomial_single_coordinate():
    prior = ModelSelectionPrior.binomial(1, 0.3)
    assert np.allclose(prior.pmf, [0.7, 0.3], rtol=0, atol=1e-15)


def test_poisson_truncated():
    prior = ModelSelectionPrior.poisson(2, 1.0)
    assert np.allclose(prior.pmf, [0.4, 0.4, 0.2], rtol=0, atol=1e-15)


def test_poly_tail_and_sub_exponential_shapes():
    pt = ModelSelectionPrior.poly_tail(4, 2.0).pmf
    w = np.array([1, 1, 1 / 4, 1 / 9, 1 / 16])
    assert np.allclose(pt, w / w.sum(), rtol=1e-14)
    se = ModelSelectionPrior.sub_exponential(3, 1.0).pmf
    w = np.exp(-np.arange(4.0))
    assert np.allclose(se, w / w.sum(), rtol=1e-14)


def test_degenerate_beta_binomial():
    assert ModelSelectionPrior.beta_binomial(3, 0.0, 1.0).pmf[0] == 1.0
    assert ModelSelectionPrior.beta_binomial(3, 2.0, 0.0).pmf[3] == 1.0


def test_invalid_priors():
    with pytest.raises(ValueError):
        ModelSelectionPrior(2, np.log([0.5, 0.5]))
    with pytest.raises(ValueError):
        ModelSelectionPrior(1, np.log([0.5, 0.6]))
    with pytest.raises(ValueError):
        ModelSelectionPrior.from_weights([0.0, 0.0])
    with pytest.raises(ValueError):
        ModelSelectionPrior.from_weights([1.0, -1.0])
    with pytest.raises(ValueError):
        make_prior("geometric", 3)
    with pytest.raises(ValueError):
        make_prior("custom", 3, weights=[1, 1])


def test_make_prior_aliases():
    a = make_prior("beta_binomial", 5, kappa=1, **{"lambda": 6})
    b = ModelSelectionPrior.beta_binomial(5, 1.0, 6.0)
    assert np.array_equal(a.log_pmf, b.log_pmf)
    assert a.is_beta_binomial


def test_inclusion_marginal():
    prior = ModelSelectionPrior.beta_binomial(10, 2.0, 3.0)
    assert prior.inclusion_marginal() == pytest.approx(0.4, rel=1e-13)


def test_vtable_example():
    vt = VTable(ModelSelectionPrior.beta_binomial(2, 1.0, 1.0))
    assert math.exp(vt.row(1)[0]) == pytest.approx(0.5, abs=1e-15)
    assert math.exp(vt.row(1)[1]) == pytest.approx(0.5, abs=1e-15)
    assert vt.row(0)[0] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("stride", [1, 3, 7, None])
def test_vtable_recursion_and_normalisation(stride):
    prior = ModelSelectionPrior.poisson(40, 3.0)
    rows = VTable(prior, stride=stride).full()
    for i in range(prior.n):
        assert np.allclose(rows[i], np.logaddexp(rows[i + 1][:-1], rows[i + 1][1:]), rtol=0, atol=1e-12)
    for i, row in enumerate(rows):
        total = np.sum(np.exp(log_binom(i, np.arange(i + 1)) + row))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_vtable_index_errors():
    vt = VTable(ModelSelectionPrior.poisson(3, 1.0))
    with pytest.raises(IndexError):
        vt.row(4)
    with pytest.raises(IndexError):
        log_transition(vt.prior, 3)


def _as_custom(prior):
    return ModelSelectionPrior.from_log_weights(prior.log_pmf)


@pytest.mark.parametrize("n", [1, 2, 17, 200])
@pytest.mark.parametrize("kappa,lam", [(1.0, None), (0.5, 0.5), (2.5, 7.0)])
def test_closed_form_transition_matches_vtable(n, kappa, lam):
    lam = n + 1.0 if lam is None else lam
    bb = ModelSelectionPrior.beta_binomial(n, kappa, lam)
    custom = _as_custom(bb)
    assert not custom.is_beta_binomial
    vt = VTable(custom)
    for i in sorted({0, n // 3, n // 2, n - 1}):
        c0, c1 = log_transition(bb, i)
        v0, v1 = log_transition(custom, i, vt)
        assert np.max(np.abs(np.exp(c0) - np.exp(v0))) <= 1e-12
        assert np.max(np.abs(np.exp(c1) - np.exp(v1))) <= 1e-12
        assert np.allclose(np.exp(c0) + np.exp(c1), 1.0, rtol=0, atol=1e-15)


def test_first_transition_example():
    n = 50
    _, t1 = log_transition(ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0), 0)
    assert math.exp(t1[0]) == pytest.approx(1 / (n + 2), rel=1e-15)
    _, t1 = log_transition(ModelSelectionPrior.beta_binomial(n, 1.0, n + 1.0), 1)
    assert math.exp(t1[1]) == pytest.approx(2 / (n + 3), rel=1e-15)
    assert math.exp(t1[0]) == pytest.approx(1 / (n + 3), rel=1e-15)


@settings(max_examples=30)
@given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=9).filter(lambda w: sum(w) > 0))
def test_path_products_reproduce_pattern_probabilities(weights):
    prior = ModelSelectionPrior.from_weights(weights)
    n = prior.n
    vt = VTable(prior)
    trans = [log_transition(prior, i, vt) for i in range(n)]
    pattern = prior.log_pattern_prob()
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        log_p, m = 0.0, 0
        for i, b in enumerate(bits):
            log_p += trans[i][b][m]
            m += b
        p = math.exp(log_p)
        total += p
        expect = math.exp(pattern[m])
        assert abs(p - expect) <= 1e-12 * max(1.0, expect)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_unreachable_states_are_neg_inf():
    prior = ModelSelectionPrior.point_mass(4, 2)
    t0, t1 = log_transition(prior, 3)
    # after three coordinates with three ones the prefix is impossible
    assert np.isneginf(t0[3]) and np.isneginf(t1[3])
    assert math.exp(t1[1]) == pytest.approx(1.0)
    assert math.exp(t0[2]) == pytest.approx(1.0)


def _mp_pattern(prior_weights, n, m):
    total = mp.fsum(prior_weights)
    return prior_weights[m] / total / mp.binomial(n, m)


@pytest.mark.parametrize("family", ["beta", "poisson", "custom"])
def test_tracked_tables_contain_exact_values(family):
    n = 12
    with mp.workdps(50):
        if family == "beta":
            prior = ModelSelectionPrior.beta_binomial(n, 0.7, 3.3)
            k, l = mp.mpf(0.7), mp.mpf(3.3)
            w = [mp.binomial(n, s) * mp.beta(k + s, l + n - s) / mp.beta(k, l) for s in range(n + 1)]
        elif family == "poisson":
            prior = ModelSelectionPrior.poisson(n, 2.5)
            w = [mp.mpf(2.5) ** s / mp.factorial(s) for s in range(n + 1)]
        else:
            raw = [0.3, 1.0, 0.0, 2.0, 0.1, 0.7, 0.0, 0.0, 1.5, 0.2, 0.05, 0.0, 0.9]
            prior = ModelSelectionPrior.from_weights(raw)
            w = [mp.mpf(x) for x in raw]
        pattern = [_mp_pattern(w, n, m) for m in range(n + 1)]
        rows = [pattern]
        for _ in range(n):
            prev = rows[-1]
            rows.append([prev[j] + prev[j + 1] for j in range(len(prev) - 1)])
        rows = rows[::-1]
        vt = VTable(prior, tracked=True, stride=4)
        for i in range(n + 1):
            row = vt.row(i)
            assert isinstance(row, LogInterval)
            for m in range(i + 1):
                exact = rows[i][m]
                if exact == 0:
                    assert np.isneginf(row.hi[m])
                    continue
                le = mp.log(exact)
                assert row.lo[m] <= le <= row.hi[m]
        for i in range(n):
            t0, t1 = log_transition(prior, i, vt, tracked=True)
            for m in range(i + 1):
                if rows[i][m] == 0:
                    continue
                for t, nxt in ((t0, rows[i + 1][m]), (t1, rows[i + 1][m + 1])):
                    if nxt == 0:
                        assert np.isneginf(t.hi[m])
                        continue
                    le = mp.log(nxt / rows[i][m])
                    assert t.lo[m] <= le <= t.hi[m]


def test_beta_mixing_pattern_probability():
    mix = BetaMixing(2.0, 3.0)
    s = np.arange(6)
    assert np.allclose(mix.log_pattern_prob(5), betaln(2 + s, 8 - s) - betaln(2, 3), rtol=0, atol=1e-14)
    assert np.allclose(mix.to_model_selection(5).log_pattern_prob(), mix.log_pattern_prob(5), atol=1e-12)
    with pytest.raises(ValueError):
        BetaMixing(0.0, 1.0)


def test_density_mixing_uniform_is_beta_one_one():
    mix = DensityMixing(lambda a: 1.0)
    assert np.allclose(mix.log_pattern_prob(8), BetaMixing(1.0, 1.0).log_pattern_prob(8), rtol=0, atol=1e-10)
    assert mix.mass(0.25, 0.5) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ValueError):
        DensityMixing(lambda a: 2.0)
