"""Log-domain arithmetic for nonnegative reals.

A nonnegative number ``a`` is stored as ``x = ln a``; ``0`` maps to ``-inf`` and
``inf`` to ``+inf``.  Two layers are provided:

* scalar rules (:func:`log_add`, :func:`log_sub`, :func:`log_mul`,
  :func:`log_div`) and the :class:`LogValue` wrapper;
* :class:`LogInterval`, a vectorised interval type whose end-points are
  rounded outward so the exact result of every operation is enclosed.

The array helpers at the bottom (:func:`ladd`, :func:`lmul`, :func:`lsumexp`,
...) dispatch on their argument type, so the inference algorithms can be
written once and run either on plain ``float64`` arrays of logs or on
:class:`LogInterval` arrays ("tracked" mode).

Outward rounding works without touching the FPU rounding mode.  Sums and
differences use an error-free transformation (TwoSum) to decide which side of
the round-to-nearest result the exact value lies on.  Transcendentals
(``exp``, ``log``, ``log1p``, ``expm1``) are widened by one unit in the last
place of the computed value; the numpy kernels used here are accurate to well
under one ulp on the supported platforms (checked in the test suite against
``mpmath``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit
from scipy.special import logsumexp as _np_logsumexp

NEG_INF = -math.inf
POS_INF = math.inf

# unit roundoff for binary64
UNIT_ROUNDOFF = 2.0 ** -53
PRECISION_BITS = 53


class DomainError(ArithmeticError):
    """An operation has no nonnegative real result (e.g. ``a - b`` with ``b > a``)."""


class NumericalError(ArithmeticError):
    """A numerical routine (quadrature, root finding) did not reach its tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


# ---------------------------------------------------------------------------
# scalar rules


def log_add(x: float, y: float) -> float:
    """``ln(e^x + e^y)`` without overflow."""
    if x < y:
        x, y = y, x
    if x == NEG_INF or x == POS_INF:
        # covers x = y = -inf and x = +inf
        return x
    return x + math.log1p(math.exp(y - x))


def log1mexp(d: float) -> float:
    """``ln(1 - e^d)`` for ``d <= 0``."""
    if d > 0:
        raise DomainError(f"log1mexp undefined for d={d!r} > 0")
    if d == 0:
        return NEG_INF
    if d > -math.log(2.0):
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


def log_sub(x: float, y: float) -> float:
    """``ln(e^x - e^y)``; requires ``x >= y``."""
    if math.isnan(x) or math.isnan(y):
        raise DomainError("NaN operand")
    if x < y:
        raise DomainError(f"log_sub: result negative (x={x!r} < y={y!r})")
    if y == NEG_INF:
        return x
    if x == POS_INF:
        raise DomainError("log_sub: inf - inf is indeterminate")
    return x + log1mexp(y - x)


def log_mul(x: float, y: float) -> float:
    """``ln(a * b)``."""
    r = x + y
    if math.isnan(r):
        raise DomainError("log_mul: 0 * inf is indeterminate")
    return r


def log_div(x: float, y: float) -> float:
    """``ln(a / b)``."""
    r = x - y
    if math.isnan(r):
        raise DomainError("log_div: indeterminate form (0/0 or inf/inf)")
    return r


def log_mul_div(x: float, y: float, mode: str) -> float:
    if mode == "mul":
        return log_mul(x, y)
    if mode == "div":
        return log_div(x, y)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True, order=True)
class LogValue:
    """A nonnegative real held as its natural logarithm."""

    log: float

    def __post_init__(self):
        if math.isnan(self.log):
            raise DomainError("LogValue cannot hold NaN")

    @classmethod
    def from_value(cls, a: float) -> "LogValue":
        if a < 0:
            raise DomainError(f"negative value {a!r}")
        return cls(math.log(a) if a > 0 else NEG_INF)

    @property
    def value(self) -> float:
        return math.exp(self.log)

    def __add__(self, other: "LogValue") -> "LogValue":
        return LogValue(log_add(self.log, other.log))

    def __sub__(self, other: "LogValue") -> "LogValue":
        return LogValue(log_sub(self.log, other.log))

    def __mul__(self, other: "LogValue") -> "LogValue":
        return LogValue(log_mul(self.log, other.log))

    def __truediv__(self, other: "LogValue") -> "LogValue":
        return LogValue(log_div(self.log, other.log))


# ---------------------------------------------------------------------------
# directed rounding primitives (vectorised)


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _step_down(x: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(x), np.nextafter(x, NEG_INF), x)


def _step_up(x: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(x), np.nextafter(x, POS_INF), x)


def _two_sum(a: np.ndarray, b: np.ndarray):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def add_down(a, b) -> np.ndarray:
    """Largest float ``<= a + b`` (exact sum), infinities passed through."""
    a, b = _arr(a), _arr(b)
    with np.errstate(invalid="ignore", over="ignore"):
        s, err = _two_sum(a, b)
        out = np.where(err < 0, np.nextafter(s, NEG_INF), s)
        out = np.where(np.isfinite(s) & np.isfinite(err), out, s)
        # finite operands overflowing upward: the exact sum is still finite
        overflow = np.isposinf(s) & np.isfinite(a) & np.isfinite(b)
        return np.where(overflow, np.finfo(np.float64).max, out)


def add_up(a, b) -> np.ndarray:
    """Smallest float ``>= a + b``."""
    a, b = _arr(a), _arr(b)
    with np.errstate(invalid="ignore", over="ignore"):
        s, err = _two_sum(a, b)
        out = np.where(err > 0, np.nextafter(s, POS_INF), s)
        out = np.where(np.isfinite(s) & np.isfinite(err), out, s)
        overflow = np.isneginf(s) & np.isfinite(a) & np.isfinite(b)
        return np.where(overflow, -np.finfo(np.float64).max, out)


def sub_down(a, b) -> np.ndarray:
    return add_down(a, -_arr(b))


def sub_up(a, b) -> np.ndarray:
    return add_up(a, -_arr(b))


def _widen_down(v: np.ndarray) -> np.ndarray:
    # one ulp of the computed value; v - ulp(v) is representable
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(v), v - np.spacing(np.abs(v)), v)


def _widen_up(v: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(v), v + np.spacing(np.abs(v)), v)


def exp_down(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(over="ignore", under="ignore"):
        v = np.exp(x)
    exact = (x == 0) | np.isinf(x)
    return np.where(exact, v, np.maximum(_widen_down(v), 0.0))


def exp_up(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(over="ignore", under="ignore"):
        v = np.exp(x)
    exact = (x == 0) | np.isinf(x)
    return np.where(exact, v, _widen_up(v))


def log_down(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log(x)
    exact = (x == 1) | (x == 0) | np.isinf(x)
    return np.where(exact, v, _widen_down(v))


def log_up(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log(x)
    exact = (x == 1) | (x == 0) | np.isinf(x)
    return np.where(exact, v, _widen_up(v))


def log1p_down(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log1p(x)
    return np.where(x == 0, v, _widen_down(v))


def log1p_up(x) -> np.ndarray:
    x = _arr(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.log1p(x)
    return np.where(x == 0, v, _widen_up(v))


def _log1mexp_down(d: np.ndarray) -> np.ndarray:
    """Lower bound of ``ln(1 - e^d)``; ``d`` must already be an upper bound."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        near = d > -math.log(2.0)
        # -expm1(d) decreasing in d, so its lower bound uses the widened-up expm1
        em1 = np.expm1(d)
        em1_hi = np.where(d == 0, em1, _widen_up(em1))
        a = log_down(np.maximum(-em1_hi, 0.0))
        b = log1p_down(-exp_up(d))
        out = np.where(near, a, b)
    return np.where(d >= 0, NEG_INF, out)


def _log1mexp_up(d: np.ndarray) -> np.ndarray:
    """Upper bound of ``ln(1 - e^d)``; ``d`` must already be a lower bound."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        near = d > -math.log(2.0)
        em1 = np.expm1(d)
        em1_lo = np.where(d == 0, em1, _widen_down(em1))
        a = log_up(-em1_lo)
        b = log1p_up(-exp_down(d))
        out = np.where(near, a, b)
    return np.where(d >= 0, NEG_INF, out)


def _logaddexp_dir(x: np.ndarray, y: np.ndarray, upward: bool) -> np.ndarray:
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    with np.errstate(invalid="ignore"):
        if upward:
            d = sub_up(lo, hi)
            t = log1p_up(exp_up(d))
            r = add_up(hi, t)
        else:
            d = sub_down(lo, hi)
            t = log1p_down(exp_down(d))
            r = add_down(hi, t)
    r = np.where(lo == NEG_INF, hi, r)
    r = np.where(hi == POS_INF, POS_INF, r)
    return r


# ---------------------------------------------------------------------------
# interval type


@dataclass(frozen=True, eq=False)
class LogInterval:
    """Bounds ``[lo, hi]`` on the logarithm of a nonnegative real (vectorised).

    ``partial`` is set once some operation had member pairs with no
    nonnegative result (only subtraction can do that); the interval then holds
    the valid part of the result.
    """

    lo: np.ndarray
    hi: np.ndarray
    partial: bool = False

    def __post_init__(self):
        lo, hi = _arr(self.lo), _arr(self.hi)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
            lo, hi = lo.copy(), hi.copy()
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise DomainError("LogInterval end-point is NaN")
        if (lo > hi).any():
            raise ValueError("LogInterval requires lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> "LogInterval":
        x = _arr(x)
        return cls(x, x.copy())

    @classmethod
    def around(cls, x, abs_err) -> "LogInterval":
        """Interval ``[x - err, x + err]`` with outward rounding."""
        x = _arr(x)
        return cls(sub_down(x, abs_err), add_up(x, abs_err))

    @classmethod
    def from_value(cls, a) -> "LogInterval":
        """Enclose ``ln a`` for nonnegative floats ``a``."""
        return cls(log_down(a), log_up(a))

    @property
    def shape(self):
        return self.lo.shape

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx) -> "LogInterval":
        return LogInterval(self.lo[idx], self.hi[idx], self.partial)

    @property
    def width(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            w = self.hi - self.lo
        return np.where(self.lo == self.hi, 0.0, w)

    @property
    def mid(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            m = 0.5 * self.lo + 0.5 * self.hi
        m = np.where(np.isneginf(self.lo), self.hi, m)
        return np.where(np.isposinf(self.hi), self.lo, m)

    def contains(self, x) -> np.ndarray:
        x = _arr(x)
        return (self.lo <= x) & (x <= self.hi)

    def value_bounds(self):
        """Bounds on the represented value ``e^x`` itself."""
        return exp_down(self.lo), exp_up(self.hi)

    # arithmetic on the represented values ---------------------------------

    def __add__(self, other) -> "LogInterval":
        other = as_interval(other)
        return LogInterval(
            _logaddexp_dir(self.lo, other.lo, upward=False),
            _logaddexp_dir(self.hi, other.hi, upward=True),
            self.partial or other.partial,
        )

    __radd__ = __add__

    def __mul__(self, other) -> "LogInterval":
        other = as_interval(other)
        with np.errstate(invalid="ignore"):
            lo = add_down(self.lo, other.lo)
            hi = add_up(self.hi, other.hi)
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise DomainError("interval product 0 * inf is indeterminate")
        return LogInterval(lo, hi, self.partial or other.partial)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogInterval":
        other = as_interval(other)
        with np.errstate(invalid="ignore"):
            lo = sub_down(self.lo, other.hi)
            hi = sub_up(self.hi, other.lo)
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise DomainError("interval quotient is indeterminate")
        return LogInterval(lo, hi, self.partial or other.partial)

    def __sub__(self, other) -> "LogInterval":
        other = as_interval(other)
        if (self.hi < other.lo).any():
            raise DomainError("interval subtraction: every member pair is negative")
        partial = bool((self.lo < other.hi).any())
        with np.errstate(invalid="ignore"):
            # lower end: smallest a minus largest b
            d_lo_end = sub_up(other.hi, self.lo)
            lo = add_down(self.lo, _log1mexp_down(d_lo_end))
            lo = np.where(other.hi == NEG_INF, self.lo, lo)
            lo = np.where(d_lo_end >= 0, NEG_INF, lo)
            d_hi_end = sub_down(other.lo, self.hi)
            hi = add_up(self.hi, _log1mexp_up(d_hi_end))
            hi = np.where(other.lo == NEG_INF, self.hi, hi)
            hi = np.where(d_hi_end >= 0, NEG_INF, hi)
        if np.isposinf(self.lo).any() and np.isposinf(other.hi).any():
            raise DomainError("interval subtraction inf - inf is indeterminate")
        return LogInterval(lo, np.maximum(lo, hi), self.partial or partial)


LogLike = Union[np.ndarray, LogInterval]


def as_interval(x) -> LogInterval:
    if isinstance(x, LogInterval):
        return x
    return LogInterval.point(x)


def interval_op(x: LogInterval, y: LogInterval, op: str) -> LogInterval:
    """Apply ``op`` in {"add", "sub", "mul", "div"} to the represented values."""
    ops = {
        "add": LogInterval.__add__,
        "sub": LogInterval.__sub__,
        "mul": LogInterval.__mul__,
        "div": LogInterval.__truediv__,
    }
    try:
        fn = ops[op]
    except KeyError:
        raise ValueError(f"unknown op {op!r}") from None
    return fn(as_interval(x), as_interval(y))


# ---------------------------------------------------------------------------
# type-dispatching array helpers used by the algorithms


def is_tracked(x) -> bool:
    return isinstance(x, LogInterval)


def ladd(x, y):
    """Log of the sum of the represented values."""
    if isinstance(x, LogInterval) or isinstance(y, LogInterval):
        return as_interval(x) + as_interval(y)
    return np.logaddexp(x, y)


def lmul(x, y):
    """Log of the product of the represented values."""
    if isinstance(x, LogInterval) or isinstance(y, LogInterval):
        return as_interval(x) * as_interval(y)
    with np.errstate(invalid="raise"):
        try:
            return np.add(x, y)
        except FloatingPointError:
            raise DomainError("0 * inf is indeterminate") from None


def ldiv(x, y):
    if isinstance(x, LogInterval) or isinstance(y, LogInterval):
        return as_interval(x) / as_interval(y)
    with np.errstate(invalid="raise"):
        try:
            return np.subtract(x, y)
        except FloatingPointError:
            raise DomainError("indeterminate quotient") from None


def lsub(x, y):
    """Log of the difference; point mode raises on any negative result."""
    if isinstance(x, LogInterval) or isinstance(y, LogInterval):
        return as_interval(x) - as_interval(y)
    x, y = np.broadcast_arrays(_arr(x), _arr(y))
    if (x < y).any():
        raise DomainError("log-domain subtraction with negative result")
    out = x.copy()
    d = y - x
    mask = np.isfinite(x) & (y > NEG_INF)
    with np.errstate(divide="ignore"):
        dd = d[mask]
        out[mask] = x[mask] + np.where(
            dd > -math.log(2.0), np.log(-np.expm1(dd)), np.log1p(-np.exp(dd))
        )
    return out


def lsumexp(x, axis=None):
    """Log of the sum of represented values along ``axis``."""
    if isinstance(x, LogInterval):
        return _interval_logsumexp(x, axis)
    x = _arr(x)
    if x.size == 0:
        return np.float64(NEG_INF) if axis is None else np.full(
            np.delete(x.shape, axis), NEG_INF)
    with np.errstate(divide="ignore"):
        return _np_logsumexp(x, axis=axis)


def _gamma_bound(k: int) -> float:
    ku = k * UNIT_ROUNDOFF
    return ku / (1.0 - ku)


def _interval_logsumexp(x: LogInterval, axis) -> LogInterval:
    lo, hi = x.lo, x.hi
    if axis is None:
        lo, hi, axis = lo.ravel(), hi.ravel(), 0
    k = lo.shape[axis]
    if k == 0:
        shape = np.delete(lo.shape, axis)
        return LogInterval(np.full(shape, NEG_INF), np.full(shape, NEG_INF), x.partial)
    g = _gamma_bound(k + 1)

    def one_side(v, upward):
        m = np.max(v, axis=axis, keepdims=True)
        m_safe = np.where(np.isfinite(m), m, 0.0)
        if upward:
            terms = exp_up(sub_up(v, m_safe))
            s = np.sum(terms, axis=axis, keepdims=True)
            s = _widen_up(s * (1.0 + g))
            r = add_up(m_safe, log_up(s))
        else:
            terms = exp_down(sub_down(v, m_safe))
            s = np.sum(terms, axis=axis, keepdims=True)
            s = np.maximum(_widen_down(s * (1.0 - g)), 0.0)
            r = add_down(m_safe, log_down(s))
        r = np.where(np.isfinite(m), r, m)
        return np.squeeze(r, axis=axis)

    return LogInterval(one_side(lo, False), one_side(hi, True), x.partial)


def shift(x, c: float):
    """Divide the represented values by ``e^c`` (``c`` a finite float)."""
    if isinstance(x, LogInterval):
        return LogInterval(sub_down(x.lo, c), sub_up(x.hi, c), x.partial)
    return x - c


def pad(x, before: int, after: int):
    """Pad the last axis with zeros (log ``-inf``)."""
    if isinstance(x, LogInterval):
        return LogInterval(pad(x.lo, before, after), pad(x.hi, before, after), x.partial)
    width = [(0, 0)] * (x.ndim - 1) + [(before, after)]
    return np.pad(x, width, constant_values=NEG_INF)


def full(shape, value: float, tracked: bool):
    a = np.full(shape, value, dtype=np.float64)
    return LogInterval.point(a) if tracked else a


def concat(parts, axis=-1):
    if any(isinstance(p, LogInterval) for p in parts):
        parts = [as_interval(p) for p in parts]
        return LogInterval(
            np.concatenate([p.lo for p in parts], axis=axis),
            np.concatenate([p.hi for p in parts], axis=axis),
            any(p.partial for p in parts),
        )
    return np.concatenate(parts, axis=axis)


def column_max(x) -> float:
    """A finite float close to the largest represented log (for rescaling)."""
    v = x.hi if isinstance(x, LogInterval) else x
    m = float(np.max(v)) if np.size(v) else NEG_INF
    return m if math.isfinite(m) else 0.0


def posterior_odds_to_prob(log_num, log_den):
    """``num / (num + den)`` from logs; returns ``(p, p_lo, p_hi)``.

    In point mode ``p_lo = p_hi = p``.
    """
    if isinstance(log_num, LogInterval) or isinstance(log_den, LogInterval):
        num, den = as_interval(log_num), as_interval(log_den)
        with np.errstate(invalid="ignore", over="ignore"):
            # p = 1 / (1 + den/num), decreasing in den/num
            r_hi = exp_up(sub_up(den.hi, num.lo))
            r_lo = exp_down(sub_down(den.lo, num.hi))
            p_lo = _step_down(1.0 / add_up(1.0, r_hi))
            p_hi = _step_up(1.0 / add_down(1.0, r_lo))
        p_lo = np.clip(np.where(np.isnan(p_lo), 0.0, p_lo), 0.0, 1.0)
        p_hi = np.clip(np.where(np.isnan(p_hi), 1.0, p_hi), 0.0, 1.0)
        both_zero = np.isneginf(num.hi) & np.isneginf(den.hi)
        if both_zero.any():
            raise DomainError("0/0 posterior odds")
        with np.errstate(invalid="ignore"):
            p = 0.5 * (p_lo + p_hi)
        return p, p_lo, p_hi
    num, den = _arr(log_num), _arr(log_den)
    with np.errstate(invalid="ignore"):
        d = num - den
    if np.isnan(d).any():
        raise DomainError("indeterminate posterior odds")
    p = expit(d)
    return p, p, p


# ---------------------------------------------------------------------------
# lean bounds for hot loops
#
# A round-to-nearest sum is within half an ulp of the exact sum, so stepping
# one float outward encloses it.  ``np.logaddexp`` is bounded by
# ``ulp(r) + ulp(x) + ulp(y) + 4 ulp(1)``; the test suite checks this margin
# against arbitrary precision.


def fast_add_down(a, b, out=None):
    s = np.add(a, b, out=out)
    return np.nextafter(s, NEG_INF, out=s)


def fast_add_up(a, b, out=None):
    s = np.add(a, b, out=out)
    return np.nextafter(s, POS_INF, out=s)


def _logaddexp_err(x, y, r):
    with np.errstate(invalid="ignore"):
        err = np.spacing(np.abs(r))
        err += np.spacing(np.abs(x))
        err += np.spacing(np.abs(y))
        err += 4 * np.spacing(1.0)
    # infinite operands are handled exactly by logaddexp
    return np.fmax(err, 0.0, out=err) if np.ndim(err) else (0.0 if np.isnan(err) else err)


def fast_logaddexp_down(x, y, out=None):
    r = np.logaddexp(x, y, out=out)
    err = _logaddexp_err(x, y, r)
    with np.errstate(invalid="ignore"):
        return np.subtract(r, err, out=r) if np.ndim(r) else r - err


def fast_logaddexp_up(x, y, out=None):
    r = np.logaddexp(x, y, out=out)
    err = _logaddexp_err(x, y, r)
    with np.errstate(invalid="ignore"):
        return np.add(r, err, out=r) if np.ndim(r) else r + err


def lse_bounds(x, upward: bool, axis=-1):
    """Outward-rounded ``ln Σ exp(x)`` along ``axis``.

    Error model: each shifted exponential has absolute error at most
    ``u (term + 1/e)``, summation adds ``γ_k``, and the final log and shift
    add two ulps of the result.
    """
    x = np.asarray(x, dtype=np.float64)
    k = x.shape[axis]
    m = np.max(x, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    s = np.sum(np.exp(x - safe), axis=axis)
    safe = np.squeeze(safe, axis=axis)
    m = np.squeeze(m, axis=axis)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = safe + np.log(s)
        rel = 4.0 * (k + 2) * UNIT_ROUNDOFF
        err = rel + 2.0 * np.spacing(np.abs(r))
        out = r + err if upward else r - err
    return np.where(np.isfinite(m), out, m)
