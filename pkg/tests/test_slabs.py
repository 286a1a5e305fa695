import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import ndtr

from exactsparse.lognum import NEG_INF, POS_INF
from exactsparse.slabs import (
    CauchySlab,
    CustomSlab,
    GaussianSlab,
    LaplaceSlab,
    Slab,
    log_phi,
    make_slab,
    uniform_slab,
)
from oracle import log_psi_by_quadrature


def laplace_logpdf(a):
    return lambda t: mp.log(mp.mpf(a) / 2) - mp.mpf(a) * abs(t)


def mp_zeta(logpdf, y):
    with mp.workdps(40):
        y = mp.mpf(y)
        f = lambda t: t * mp.exp(-(y - t) ** 2 / 2 + logpdf(t)) / mp.sqrt(2 * mp.pi)  # noqa: E731
        return mp.quad(f, [-mp.inf, 0, y, mp.inf])


def mp_psi_partial(logpdf, y, u):
    with mp.workdps(40):
        y, u = mp.mpf(y), mp.mpf(u)
        f = lambda t: mp.exp(-(y - t) ** 2 / 2 + logpdf(t)) / mp.sqrt(2 * mp.pi)  # noqa: E731
        pts = sorted({mp.mpf(0), y} - {u})
        return mp.quad(f, [-mp.inf, *[p for p in pts if p < u], u])


def quadrature_log_psi(slab, y):
    """The generic quadrature route of the base class, bypassing closed forms."""
    return Slab.log_psi(slab, y)


def test_log_phi():
    assert log_phi(0.0) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_gaussian_psi_at_zero():
    assert GaussianSlab(1.0).log_psi(0.0) == pytest.approx(math.log(1 / math.sqrt(4 * math.pi)), abs=1e-15)


def test_laplace_psi_at_zero_matches_quadrature():
    got = float(LaplaceSlab(1.0).log_psi(0.0))
    assert abs(got - float(log_psi_by_quadrature(laplace_logpdf(1.0), 0.0))) < 1e-12


def test_uniform_slab_psi_at_zero():
    got = float(uniform_slab(1.0).log_psi(0.0))
    assert got == pytest.approx(math.log((ndtr(1) - ndtr(-1)) / 2), abs=1e-12)


@pytest.mark.parametrize("slab", [LaplaceSlab(1.0), GaussianSlab(2.0), CauchySlab(1.0)])
def test_zeta_symmetric_at_zero(slab):
    sign, _ = slab.log_zeta(0.0)
    assert float(sign) == 0.0
    assert slab.posterior_mean(0.0) == 0.0


def test_gaussian_zeta_over_psi():
    sign, log_abs = GaussianSlab(1.0).log_zeta(2.0)
    assert sign == 1.0
    assert math.exp(float(log_abs - GaussianSlab(1.0).log_psi(2.0))) == pytest.approx(1.0, rel=1e-15)


def test_laplace_zeta_matches_quadrature():
    sign, log_abs = LaplaceSlab(1.0).log_zeta(3.0)
    ref = mp_zeta(laplace_logpdf(1.0), 3.0)
    assert sign == 1.0
    assert abs(math.exp(float(log_abs)) / float(ref) - 1) <= 1e-10


@pytest.mark.parametrize("slab", [LaplaceSlab(0.7), GaussianSlab(1.0), CauchySlab(0.5)])
def test_psi_partial_half_at_symmetric_point(slab):
    assert float(slab.log_psi_partial(0.0, 0.0)) == pytest.approx(float(slab.log_psi(0.0)) - math.log(2), abs=1e-9)


def test_psi_partial_limits():
    slab = LaplaceSlab(1.0)
    assert float(slab.log_psi_partial(1.0, NEG_INF)) == NEG_INF
    assert float(slab.log_psi_partial(1.0, 60.0)) == pytest.approx(float(slab.log_psi(1.0)), abs=1e-14)


def test_laplace_psi_partial_matches_quadrature():
    got = math.exp(float(LaplaceSlab(1.0).log_psi_partial(1.0, 0.0)))
    ref = float(mp_psi_partial(laplace_logpdf(1.0), 1.0, 0.0))
    assert abs(got / ref - 1) <= 1e-10


def test_h_inverse_conventions():
    slab = LaplaceSlab(1.0)
    assert slab.h_inverse(1.0, 0.0) == NEG_INF
    assert slab.h_inverse(1.0, -0.1) == NEG_INF
    assert slab.h_inverse(1.0, 1.0) == POS_INF
    assert abs(slab.h_inverse(0.0, 0.5)) < 1e-9
    assert abs(CauchySlab(1.0).h_inverse(0.0, 0.5)) < 1e-8


def test_gaussian_h_inverse_median():
    assert GaussianSlab(1.0).h_inverse(2.0, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_generic_root_find_on_gaussian_density():
    # same density as GaussianSlab(1) but through the quadrature + root-finding route
    slab = CustomSlab(logpdf_fn=lambda t: -0.5 * t * t - 0.5 * math.log(2 * math.pi), symmetric_flag=True)
    assert slab.h_inverse(2.0, 0.5) == pytest.approx(1.0, abs=1e-8)
    assert slab.h_inverse(2.0, 0.9) == pytest.approx(GaussianSlab(1.0).h_inverse(2.0, 0.9), abs=1e-8)


@pytest.mark.parametrize("slab", [LaplaceSlab(1.0), LaplaceSlab(0.5), GaussianSlab(1.0), GaussianSlab(0.5)])
def test_closed_forms_match_quadrature(slab, rng):
    ys = rng.uniform(-12, 12, 1000)
    closed = slab.log_psi(ys)
    quad = quadrature_log_psi(slab, ys)
    # relative error 1e-10 on the density is an absolute error 1e-10 on its log
    assert np.max(np.abs(closed - quad)) <= 1e-10
    ys_small = ys[:100]
    sign_c, mag_c = slab.log_zeta(ys_small)
    sign_q, mag_q = Slab.log_zeta(slab, ys_small)
    assert np.array_equal(sign_c, sign_q)
    assert np.max(np.abs(mag_c - mag_q)) <= 1e-10
    us = ys_small + rng.normal(0, 2, ys_small.size)
    part_c = slab.log_psi_partial(ys_small, us)
    part_q = Slab.log_psi_partial(slab, ys_small, us)
    assert np.max(np.abs(part_c - part_q)) <= 1e-9


def test_cauchy_matches_mpmath():
    slab = CauchySlab(1.0)
    logpdf = lambda t: -mp.log(mp.pi) - mp.log(1 + t * t)  # noqa: E731
    for y in (-7.0, 0.0, 0.3, 4.0, 15.0):
        assert abs(float(slab.log_psi(y)) - float(log_psi_by_quadrature(logpdf, y))) < 1e-10


@pytest.mark.parametrize("slab", [LaplaceSlab(1.0), GaussianSlab(1.0), CauchySlab(1.0)])
def test_psi_partial_monotone(slab):
    us = np.linspace(-10, 10, 81)
    vals = slab.log_psi_partial(np.full(us.size, 1.3), us)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(vals <= float(slab.log_psi(1.3)) + 1e-12)


@pytest.mark.parametrize("slab", [LaplaceSlab(1.0), GaussianSlab(1.0), CauchySlab(2.0)])
def test_symmetry(slab, rng):
    ys = rng.uniform(0.1, 8, 20)
    assert np.allclose(slab.log_psi(ys), slab.log_psi(-ys), rtol=0, atol=1e-13)
    s_pos, m_pos = slab.log_zeta(ys)
    s_neg, m_neg = slab.log_zeta(-ys)
    assert np.array_equal(s_pos, -s_neg)
    assert np.allclose(m_pos, m_neg, rtol=0, atol=1e-12)


def test_psi_positive_far_out():
    for slab in (LaplaceSlab(1.0), GaussianSlab(1.0)):
        assert np.isfinite(slab.log_psi(np.array([-1e3, 1e3]))).all()


def test_custom_slab_must_normalise():
    with pytest.raises(ValueError):
        CustomSlab(logpdf_fn=lambda t: -abs(t))


def test_bad_parameters():
    for ctor in (LaplaceSlab, GaussianSlab, CauchySlab):
        with pytest.raises(ValueError):
            ctor(-1.0)
    with pytest.raises(ValueError):
        make_slab("student")
    assert isinstance(make_slab("normal", 2.0), GaussianSlab)
