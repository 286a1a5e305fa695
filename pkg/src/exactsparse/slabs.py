"""Slab densities and their convolutions with the standard normal kernel.

For a slab density ``g`` and observation ``y`` every slab exposes

``log_psi(y)``
    ``ln ∫ φ(y - t) g(t) dt``, the marginal density of ``y`` under a nonzero
    coordinate;
``log_zeta(y)``
    ``∫ t φ(y - t) g(t) dt`` as a ``(sign, log|.|)`` pair;
``log_psi_partial(y, u)``
    the same integral as ``log_psi`` restricted to ``t <= u``;
``h_inverse(y, v)``
    the ``u`` solving ``psi_partial(y, u) / psi(y) = v``.

Laplace and Gaussian slabs use closed forms.  Cauchy and user supplied
densities go through adaptive quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.special import log_ndtr, ndtri

from .lognum import NEG_INF, POS_INF, NumericalError, log_sub

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_EPS = np.finfo(np.float64).eps

# Relative (in the log) error allowances used to seed tracked computations.
SPIKE_LOG_TOL = 4 * _EPS
CLOSED_FORM_LOG_TOL = 64 * _EPS
QUADRATURE_LOG_TOL = 1e-11

H_INVERSE_XTOL = 1e-10


def log_phi(y) -> np.ndarray:
    """Log standard normal density."""
    y = np.asarray(y, dtype=np.float64)
    return -0.5 * y * y - LOG_SQRT_2PI


def log_ndtr_diff(lo, hi) -> np.ndarray:
    """``ln(Φ(hi) - Φ(lo))`` for ``lo <= hi``, accurate in both tails."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    out = np.empty(lo.shape)
    upper = lo > 0
    # upper tail: Φ(hi) - Φ(lo) = Φ(-lo) - Φ(-hi)
    a = np.where(upper, log_ndtr(-lo), log_ndtr(hi))
    b = np.where(upper, log_ndtr(-hi), log_ndtr(lo))
    for idx in np.ndindex(out.shape):
        out[idx] = log_sub(float(a[idx]), float(b[idx])) if a[idx] > b[idx] else NEG_INF
    return out


def _log_h(x) -> np.ndarray:
    """``ln(x Φ(x) + φ(x))``, i.e. ``ln ∫_{-∞}^x Φ(t) dt``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape)
    flat_x, flat_o = x.ravel(), out.ravel()
    for j, v in enumerate(flat_x):
        if v > -1.0:
            val = v * math.exp(float(log_ndtr(v))) + math.exp(-0.5 * v * v - LOG_SQRT_2PI)
            flat_o[j] = math.log(val)
        elif v > -8.0:
            # 1 - x R(x) with the Mills ratio R, x = -v > 0
            z = -v
            mills = math.exp(float(log_ndtr(-z)) + 0.5 * z * z + LOG_SQRT_2PI)
            flat_o[j] = -0.5 * z * z - LOG_SQRT_2PI + math.log(1.0 - z * mills)
        else:
            # asymptotic expansion φ(z)/z² · (1 - 3/z² + 15/z⁴ - ...)
            z2 = v * v
            flat_o[j] = -0.5 * z2 - LOG_SQRT_2PI - math.log(z2) + math.log1p(_tail_series(z2))
    return out.reshape(x.shape)


def _tail_series(z2: float) -> float:
    """``-3/z² + 15/z⁴ - ...`` truncated at the smallest term."""
    term, total, prev = 1.0, 0.0, math.inf
    for k in range(2, 200):
        term *= -(2 * k - 1) / z2
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-18:
            break
    return total


@dataclass(frozen=True)
class Slab:
    """Common interface and quadrature fall-backs."""

    log_tol: float = field(default=QUADRATURE_LOG_TOL, init=False, repr=False)

    symmetric = False

    # -- density -----------------------------------------------------------
    def logpdf(self, t):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        return (NEG_INF, POS_INF)

    def breakpoints(self) -> Sequence[float]:
        return (0.0,)

    # -- functionals -------------------------------------------------------
    def log_psi(self, y) -> np.ndarray:
        return _vectorise(lambda v: self._quad_log(v, POS_INF, moment=False)[0], y)

    def log_zeta(self, y):
        pos = _vectorise(lambda v: self._quad_log(v, POS_INF, moment=True, part="pos")[0], y)
        neg = _vectorise(lambda v: self._quad_log(v, POS_INF, moment=True, part="neg")[0], y)
        return _signed_diff(pos, neg)

    def log_psi_partial(self, y, u) -> np.ndarray:
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        out = np.empty(y.shape)
        for idx in np.ndindex(y.shape):
            out[idx] = self._quad_log(float(y[idx]), float(u[idx]), moment=False)[0]
        return out

    def posterior_mean(self, y) -> np.ndarray:
        """``ζ(y)/ψ(y)``: the mean of θ given y under the slab alone."""
        sign, log_abs = self.log_zeta(y)
        return sign * np.exp(log_abs - self.log_psi(y))

    def cdf(self, y: float, u: float) -> float:
        """``psi_partial(y, u) / psi(y)``."""
        if u == NEG_INF:
            return 0.0
        if u == POS_INF:
            return 1.0
        r = float(self.log_psi_partial(y, u) - self.log_psi(y))
        return min(1.0, math.exp(r))

    def h_inverse(self, y: float, v: float) -> float:
        if v <= 0:
            return NEG_INF
        if v >= 1:
            return POS_INF
        return self._root_find(y, v)

    def _root_find(self, y: float, v: float) -> float:
        lo_s, hi_s = self.support()
        centre = float(self.posterior_mean(y))
        step = 1.0
        lo = max(centre - step, lo_s)
        while self.cdf(y, lo) > v:
            step *= 2.0
            lo = max(centre - step, lo_s)
            if step > 1e12:
                raise NumericalError("h_inverse: cannot bracket from below")
        step = 1.0
        hi = min(centre + step, hi_s)
        while self.cdf(y, hi) < v:
            step *= 2.0
            hi = min(centre + step, hi_s)
            if step > 1e12:
                raise NumericalError("h_inverse: cannot bracket from above")
        if lo == hi:
            return lo
        try:
            root, info = optimize.brentq(
                lambda u: self.cdf(y, u) - v, lo, hi, xtol=H_INVERSE_XTOL, rtol=4 * _EPS,
                full_output=True, maxiter=500,
            )
        except ValueError as exc:
            raise NumericalError(f"h_inverse bracket failed: {exc}") from exc
        if not info.converged:
            raise NumericalError("h_inverse did not converge", achieved=abs(hi - lo))
        return float(root)

    # -- quadrature --------------------------------------------------------
    def _log_integrand(self, y: float, t):
        return log_phi(y - t) + self.logpdf(t)

    def _mode(self, y: float) -> float:
        lo_s, hi_s = self.support()
        lo = max(lo_s, min(y, 0.0) - 10.0)
        hi = min(hi_s, max(y, 0.0) + 10.0)
        grid = np.linspace(lo, hi, 401)
        vals = np.asarray(self._log_integrand(y, grid), float)
        return float(grid[int(np.nanargmax(vals))])

    def _quad_log(self, y: float, upper: float, moment: bool, part: str = "all"):
        lo_s, hi_s = self.support()
        hi_lim = min(upper, hi_s)
        lo_lim = lo_s
        if part == "pos":
            lo_lim = max(lo_lim, 0.0)
        elif part == "neg":
            hi_lim = min(hi_lim, 0.0)
        if hi_lim <= lo_lim:
            return NEG_INF, 0.0
        mode = self._mode(y)
        scale = float(self._log_integrand(y, np.array(mode)))
        if moment:
            scale += math.log(abs(mode) + 1.0)
        pts = {mode, y, *self.breakpoints()}
        cuts = sorted(p for p in pts if lo_lim < p < hi_lim)
        edges = [lo_lim, *cuts, hi_lim]

        def f(t):
            w = math.exp(float(self._log_integrand(y, np.array(t))) - scale)
            return abs(t) * w if moment else w

        total, err = 0.0, 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=10_000)
            total += val
            err += e
        if total <= 0:
            return NEG_INF, err
        if err > 1e-9 * total:
            raise NumericalError("quadrature did not reach tolerance", achieved=err / total)
        return scale + math.log(total), err


def _vectorise(fn: Callable[[float], float], y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    out = np.empty(y.shape)
    for idx in np.ndindex(y.shape):
        out[idx] = fn(float(y[idx]))
    return out


def _signed_diff(log_pos, log_neg):
    """``(sign, ln|e^p - e^q|)`` elementwise."""
    log_pos, log_neg = np.broadcast_arrays(np.asarray(log_pos, float), np.asarray(log_neg, float))
    sign = np.sign(log_pos - np.where(np.isneginf(log_pos) & np.isneginf(log_neg), log_pos, log_neg))
    sign = np.where(np.isnan(sign), 0.0, sign)
    hi = np.maximum(log_pos, log_neg)
    lo = np.minimum(log_pos, log_neg)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = lo - hi
        mag = hi + np.where(d > -math.log(2.0), np.log(-np.expm1(d)), np.log1p(-np.exp(d)))
    mag = np.where(np.isneginf(lo), hi, mag)
    mag = np.where(sign == 0, NEG_INF, mag)
    return sign, mag


@dataclass(frozen=True)
class LaplaceSlab(Slab):
    """``g(t) = (a/2) exp(-a|t|)``."""

    a: float = 1.0
    log_tol: float = field(default=CLOSED_FORM_LOG_TOL, init=False, repr=False)
    symmetric = True

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("Laplace scale must be positive and finite")

    def logpdf(self, t):
        return math.log(self.a / 2.0) - self.a * np.abs(t)

    @property
    def _log_const(self) -> float:
        return math.log(self.a / 2.0) + 0.5 * self.a * self.a

    def log_psi(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        a = self.a
        return self._log_const + np.logaddexp(-a * y + log_ndtr(y - a), a * y + log_ndtr(-y - a))

    def log_zeta(self, y):
        y = np.asarray(y, dtype=np.float64)
        a = self.a
        pos = -a * y + _log_h(y - a)
        neg = a * y + _log_h(-y - a)
        sign, mag = _signed_diff(pos, neg)
        return sign, mag + self._log_const

    def log_psi_partial(self, y, u) -> np.ndarray:
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        a = self.a
        left = a * y + log_ndtr(np.minimum(u, 0.0) - y - a)
        right = np.full(y.shape, NEG_INF)
        pos = u > 0
        if pos.any():
            right[pos] = -a * y[pos] + log_ndtr_diff(-y[pos] + a, u[pos] - y[pos] + a)
        out = self._log_const + np.logaddexp(left, right)
        return np.where(np.isneginf(u), NEG_INF, out)


@dataclass(frozen=True)
class GaussianSlab(Slab):
    """Normal slab ``N(0, variance)``."""

    variance: float = 1.0
    log_tol: float = field(default=8 * _EPS, init=False, repr=False)
    symmetric = True

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError("Gaussian slab variance must be positive and finite")

    def logpdf(self, t):
        v = self.variance
        return -0.5 * np.square(t) / v - 0.5 * math.log(2 * math.pi * v)

    @property
    def shrink(self) -> float:
        return self.variance / (1.0 + self.variance)

    def log_psi(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        tot = 1.0 + self.variance
        return -0.5 * y * y / tot - 0.5 * math.log(2 * math.pi * tot)

    def log_zeta(self, y):
        y = np.asarray(y, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.sign(y), self.log_psi(y) + np.log(np.abs(y) * self.shrink)

    def posterior_mean(self, y) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.shrink

    def log_psi_partial(self, y, u) -> np.ndarray:
        y, u = np.broadcast_arrays(np.asarray(y, float), np.asarray(u, float))
        sd = math.sqrt(self.shrink)
        return self.log_psi(y) + log_ndtr((u - y * self.shrink) / sd)

    def h_inverse(self, y: float, v: float) -> float:
        if v <= 0:
            return NEG_INF
        if v >= 1:
            return POS_INF
        return float(y * self.shrink + math.sqrt(self.shrink) * ndtri(v))


@dataclass(frozen=True)
class CauchySlab(Slab):
    """Cauchy slab with the given scale."""

    scale: float = 1.0
    symmetric = True

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("Cauchy scale must be positive and finite")

    def logpdf(self, t):
        g = self.scale
        return math.log(g / math.pi) - np.log(g * g + np.square(t))


@dataclass(frozen=True)
class CustomSlab(Slab):
    """A user supplied log density on ``support``, normalised at construction.

    ``points`` lists abscissae where the density is non-smooth; quadrature
    splits there.
    """

    logpdf_fn: Callable = None
    lower: float = NEG_INF
    upper: float = POS_INF
    points: tuple = ()
    symmetric_flag: bool = False

    def __post_init__(self):
        if self.logpdf_fn is None:
            raise ValueError("CustomSlab needs a log density")
        if not self.lower < self.upper:
            raise ValueError("empty support")
        edges = [self.lower, *sorted(p for p in self.points if self.lower < p < self.upper), self.upper]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda t: math.exp(float(self.logpdf_fn(t))), a, b,
                                    epsabs=1e-13, epsrel=1e-12, limit=10_000)
            total += val
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"custom slab density integrates to {total!r}, not 1")

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.symmetric_flag

    def logpdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        inside = (t >= self.lower) & (t <= self.upper)
        vals = np.vectorize(lambda s: float(self.logpdf_fn(s)), otypes=[float])(np.where(inside, t, 0.0))
        return np.where(inside, vals, NEG_INF)

    def support(self):
        return (self.lower, self.upper)

    def breakpoints(self):
        return (0.0, *self.points)


def uniform_slab(half_width: float = 1.0) -> CustomSlab:
    """Uniform density on ``[-half_width, half_width]``."""
    lp = -math.log(2.0 * half_width)
    return CustomSlab(logpdf_fn=lambda t: lp, lower=-half_width, upper=half_width,
                      symmetric_flag=True)


def make_slab(family: str, param: float | None = None) -> Slab:
    """Build a slab from a family name (``laplace``, ``gaussian``, ``cauchy``)."""
    fam = family.lower()
    if fam == "laplace":
        return LaplaceSlab(1.0 if param is None else float(param))
    if fam in ("gaussian", "normal"):
        return GaussianSlab(1.0 if param is None else float(param))
    if fam == "cauchy":
        return CauchySlab(1.0 if param is None else float(param))
    raise ValueError(f"unknown slab family {family!r}")
