"""Polynomial-coefficient algorithm for inclusion probabilities.

The marginal likelihood is ``Q = Σ_s π(s)/C(n,s) · C_s(Ψ, Φ)`` where ``C_s(a, b)``
is the coefficient of ``Z^s`` in ``∏_i (a_i Z + b_i)``.  Zeroing the spike
factor of coordinate ``i`` restricts the sum to patterns containing ``i``,
which gives the joint mass ``p(Y, B_i = 1)``.

Everything runs on logs.  Inputs may be plain arrays or
:class:`~exactsparse.lognum.LogInterval` (tracked mode).
"""
from __future__ import annotations

import numpy as np

from .inclusion import InclusionProbs, from_ratio
from .lognum import (
    NEG_INF,
    LogInterval,
    _logaddexp_dir,
    add_down,
    add_up,
    as_interval,
    is_tracked,
    ladd,
    ldiv,
    lmul,
    lsub,
    lsumexp,
    pad,
)
from .priors import ModelSelectionPrior


def poly_coeffs(log_a, log_b):
    """Logs of the coefficients ``C_0..C_n`` of ``∏ (a_i Z + b_i)``."""
    n = len(log_a)
    if len(log_b) != n:
        raise ValueError("a and b must have equal length")
    tracked = is_tracked(log_a) or is_tracked(log_b)
    coeffs = LogInterval.point(np.zeros(1)) if tracked else np.zeros(1)
    for i in range(n):
        # new[s] = old[s-1] * a_i + old[s] * b_i
        coeffs = ladd(pad(lmul(coeffs, log_a[i : i + 1]), 1, 0),
                      pad(lmul(coeffs, log_b[i : i + 1]), 0, 1))
    return coeffs


def _weights(prior: ModelSelectionPrior, tracked: bool):
    return prior.log_pattern_prob(tracked)


def marginal_likelihood(prior: ModelSelectionPrior, log_psi, log_phi):
    """``ln Q``; a :class:`LogInterval` when either input is tracked."""
    tracked = is_tracked(log_psi) or is_tracked(log_phi)
    coeffs = poly_coeffs(log_psi, log_phi)
    return lsumexp(lmul(_weights(prior, tracked), coeffs))


def _all_dropped_coeffs(log_psi, log_phi):
    """Row ``i`` holds the coefficients with coordinate ``i``'s spike factor removed.

    Shape ``(n, n+1)``; computed for all rows at once in ``O(n^3)`` work.
    """
    n = len(log_psi)
    tracked = is_tracked(log_psi) or is_tracked(log_phi)
    if tracked:
        psi, phi = as_interval(log_psi), as_interval(log_phi)
        rows = _coeff_matrix(psi.lo, phi.lo, n, upward=False)
        rows_hi = _coeff_matrix(psi.hi, phi.hi, n, upward=True)
        return LogInterval(rows, rows_hi)
    return _coeff_matrix(np.asarray(log_psi, float), np.asarray(log_phi, float), n, upward=None)


def _coeff_matrix(psi, phi, n, upward):
    mat = np.full((n, n + 1), NEG_INF)
    mat[:, 0] = 0.0
    for j in range(n):
        spike = np.full(n, phi[j])
        spike[j] = NEG_INF
        # degree after j factors is j, so only columns 0..j+1 are live
        live = mat[:, : j + 2]
        if upward is None:
            shifted = live[:, :-1] + psi[j]
            scaled = live[:, :] + spike[:, None]
            live[:, 1:] = np.logaddexp(shifted, scaled[:, 1:])
            live[:, 0] = scaled[:, 0]
        else:
            add = add_up if upward else add_down
            shifted = add(live[:, :-1], psi[j])
            scaled = add(live, spike[:, None])
            live[:, 1:] = _logaddexp_dir(shifted, scaled[:, 1:], upward)
            live[:, 0] = scaled[:, 0]
    return mat


def q_all_cvdv(prior: ModelSelectionPrior, log_psi, log_phi) -> InclusionProbs:
    """Inclusion probabilities of all coordinates in ``O(n^3)``."""
    n = len(log_psi)
    if prior.n != n:
        raise ValueError(f"prior is for n={prior.n}, data has {n} coordinates")
    tracked = is_tracked(log_psi) or is_tracked(log_phi)
    weights = _weights(prior, tracked)
    log_q = marginal_likelihood(prior, log_psi, log_phi)
    rows = _all_dropped_coeffs(log_psi, log_phi)
    if tracked:
        w = as_interval(weights)
        prod = LogInterval(
            _add_dir(rows.lo, w.lo[None, :], False), _add_dir(rows.hi, w.hi[None, :], True))
        log_one = lsumexp(prod, axis=1)
    else:
        log_one = lsumexp(rows + weights[None, :], axis=1)
    return from_ratio(log_one, log_q, "cvdv")


def _add_dir(a, b, upward):
    return add_up(a, b) if upward else add_down(a, b)


LONGDIV_VARIANTS = ("first", "last", "middle")


def q_all_longdiv(prior: ModelSelectionPrior, log_psi, log_phi, variant: str = "first") -> InclusionProbs:
    """Inclusion probabilities by dividing each factor out of the full product.

    Always runs on intervals: the division step subtracts nearly equal
    quantities and the returned bounds show how much accuracy survives.
    ``variant`` selects which coefficient equation is dropped: ``first``
    (back substitution from the leading coefficient), ``last`` (forward
    substitution from the constant term) or ``middle`` (both halves).
    """
    if variant not in LONGDIV_VARIANTS:
        raise ValueError(f"variant must be one of {LONGDIV_VARIANTS}")
    n = len(log_psi)
    if prior.n != n:
        raise ValueError(f"prior is for n={prior.n}, data has {n} coordinates")
    psi, phi = as_interval(log_psi), as_interval(log_phi)
    weights = as_interval(_weights(prior, True))
    full = poly_coeffs(psi, phi)
    log_q = lsumexp(full * weights)

    # quotient x[i, s] for s = 0..n-1 of full / (psi_i Z + phi_i), per row i
    lo = np.full((n, max(n, 1)), NEG_INF)
    hi = np.full((n, max(n, 1)), NEG_INF)
    partial = False
    psi_c = LogInterval(psi.lo[:, None], psi.hi[:, None])
    phi_c = LogInterval(phi.lo[:, None], phi.hi[:, None])

    def coef(s):
        return LogInterval(np.full((n, 1), full.lo[s]), np.full((n, 1), full.hi[s]))

    def store(s, val):
        nonlocal partial
        lo[:, s], hi[:, s] = val.lo[:, 0], val.hi[:, 0]
        partial = partial or val.partial

    def get(s):
        return LogInterval(lo[:, s : s + 1], hi[:, s : s + 1])

    if variant == "first":
        back_from = 0
    elif variant == "last":
        back_from = n
    else:
        back_from = n // 2
    # forward substitution for x_0..x_{back_from-1} from c_0..c_{back_from-1}
    for s in range(back_from):
        rhs = coef(s) if s == 0 else lsub(coef(s), lmul(psi_c, get(s - 1)))
        store(s, ldiv(rhs, phi_c))
    # back substitution for x_{n-1}..x_{back_from} from c_n..c_{back_from+1}
    for s in range(n - 1, back_from - 1, -1):
        rhs = coef(n) if s == n - 1 else lsub(coef(s + 1), lmul(phi_c, get(s + 1)))
        store(s, ldiv(rhs, psi_c))

    quotient = LogInterval(lo, hi, partial)
    # C_s(Ψ, Φ^i) = psi_i * x_{s-1}
    with_slab = pad(lmul(quotient, psi_c), 1, 0)[:, : n + 1]
    w = LogInterval(weights.lo[None, :], weights.hi[None, :])
    log_one = lsumexp(with_slab * w, axis=1)
    res = from_ratio(log_one, log_q, f"longdiv-{variant}")
    res.partial = res.partial or partial
    return res


__all__ = [
    "poly_coeffs",
    "marginal_likelihood",
    "q_all_cvdv",
    "q_all_longdiv",
    "LONGDIV_VARIANTS",
    "InclusionProbs",
]
