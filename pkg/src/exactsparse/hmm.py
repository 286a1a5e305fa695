"""Forward-backward over the hidden chain of (inclusion bit, running count).

The hidden state after ``i`` coordinates is ``(B_i, M_i)`` with ``M_i`` the
number of ones so far.  The next bit depends on the past only through
``M_i``, so both sweeps can be written over ``m`` alone:

* ``F_i(m) = p(Y_1..Y_i, M_i = m)``
* ``G_i(m) = p(Y_{i+1}..Y_n | M_i = m)``

and the joint state masses split ``F_i`` by the last bit.  All arrays hold
logs; :class:`~exactsparse.lognum.LogInterval` inputs switch on tracking.

:func:`q_all_hmm` keeps only every ``stride``-th forward column and rebuilds
the others block by block during the backward sweep, so memory stays at
``O(n^1.5)`` while the work stays ``O(n^2)``.
"""
from __future__ import annotations

import math

import numpy as np

from .inclusion import InclusionProbs, from_odds
from .lognum import (
    LogInterval,
    add_down,
    add_up,
    as_interval,
    fast_add_down,
    fast_add_up,
    fast_logaddexp_down,
    fast_logaddexp_up,
    is_tracked,
    ladd,
    lmul,
    log_down,
    log_up,
    lse_bounds,
    lsumexp,
    pad,
    sub_down,
    sub_up,
)
from .priors import ModelSelectionPrior, VTable, log_transition


class _Transitions:
    """Cached access to the conditional inclusion law of the next coordinate."""

    def __init__(self, prior: ModelSelectionPrior, tracked: bool):
        self.prior = prior
        self.tracked = tracked
        self.vtable = None if prior.is_beta_binomial else VTable(prior, tracked)

    def __call__(self, i: int):
        """Log probabilities of the next bit being 0 / 1 given ``M_i = m``."""
        return log_transition(self.prior, i, self.vtable, self.tracked)


def _inputs(prior, log_psi, log_phi):
    n = len(log_psi)
    if len(log_phi) != n:
        raise ValueError("psi and phi must have equal length")
    if prior.n != n:
        raise ValueError(f"prior is for n={prior.n}, data has {n} coordinates")
    tracked = is_tracked(log_psi) or is_tracked(log_phi)
    if tracked:
        log_psi, log_phi = as_interval(log_psi), as_interval(log_phi)
    else:
        log_psi = np.asarray(log_psi, dtype=np.float64)
        log_phi = np.asarray(log_phi, dtype=np.float64)
    return n, tracked, log_psi, log_phi


def _start(tracked):
    return LogInterval.point(np.zeros(1)) if tracked else np.zeros(1)


def _forward_step(col, trans, log_psi_i, log_phi_i):
    """Split ``F_{i-1}`` into the two joint masses at coordinate ``i``.

    Returns ``(stay, jump)``: ``stay[m]`` is ``p(.., B_i = 0, M_i = m)`` and
    ``jump[m]`` is ``p(.., B_i = 1, M_i = m + 1)``.
    """
    t0, t1 = trans
    stay = lmul(lmul(col, t0), log_phi_i)
    jump = lmul(lmul(col, t1), log_psi_i)
    return stay, jump


def _combine(stay, jump):
    return ladd(pad(stay, 0, 1), pad(jump, 1, 0))


def forward_pass(prior: ModelSelectionPrior, log_psi, log_phi):
    """Full forward trellis.

    Returns ``(columns, log_marginal)`` where ``columns[i]`` has shape
    ``(2, i+1)``: row ``b`` holds ``ln p(Y_1..Y_i, B_i = b, M_i = m)``.
    ``columns[0]`` is the empty prefix (all mass on ``B = 0, M = 0``).
    Memory is ``O(n^2)``; use :func:`q_all_hmm` for large ``n``.
    """
    n, tracked, log_psi, log_phi = _inputs(prior, log_psi, log_phi)
    trans = _Transitions(prior, tracked)
    neg = _neg_row(1, tracked)
    columns = [_stack(_start(tracked), neg)]
    col = _start(tracked)
    for i in range(1, n + 1):
        stay, jump = _forward_step(col, trans(i - 1), log_psi[i - 1 : i], log_phi[i - 1 : i])
        columns.append(_stack(pad(stay, 0, 1), pad(jump, 1, 0)))
        col = _combine(stay, jump)
    return columns, lsumexp(col)


def backward_pass(prior: ModelSelectionPrior, log_psi, log_phi):
    """Full backward trellis; ``columns[i][m] = ln p(Y_{i+1}..Y_n | M_i = m)``.

    The backward mass does not depend on the last bit, so one row per ``i``
    suffices.  ``columns[n]`` is identically ``0`` (probability one).
    """
    n, tracked, log_psi, log_phi = _inputs(prior, log_psi, log_phi)
    trans = _Transitions(prior, tracked)
    columns = [None] * (n + 1)
    g = _zeros(n + 1, tracked)
    columns[n] = g
    for i in range(n, 0, -1):
        g = _backward_step(g, trans(i - 1), log_psi[i - 1 : i], log_phi[i - 1 : i])
        columns[i - 1] = g
    return columns


def _backward_step(g, trans, log_psi_i, log_phi_i):
    t0, t1 = trans
    return ladd(lmul(lmul(t0, log_phi_i), g[:-1]), lmul(lmul(t1, log_psi_i), g[1:]))


def _zeros(k, tracked):
    z = np.zeros(k)
    return LogInterval.point(z) if tracked else z


def _neg_row(k, tracked):
    r = np.full(k, -np.inf)
    return LogInterval.point(r) if tracked else r


def _stack(a, b):
    if isinstance(a, LogInterval) or isinstance(b, LogInterval):
        a, b = as_interval(a), as_interval(b)
        return LogInterval(np.vstack([a.lo, b.lo]), np.vstack([a.hi, b.hi]), a.partial or b.partial)
    return np.vstack([a, b])


def q_all_hmm(prior: ModelSelectionPrior, log_psi, log_phi, stride: int | None = None,
              generic: bool = False) -> InclusionProbs:
    """Inclusion probabilities of all coordinates in ``O(n^2)``.

    ``generic=True`` runs tracked inputs through :class:`LogInterval`
    arithmetic instead of the two directed sweeps; it is slower and kept as a
    cross-check.
    """
    n, tracked, log_psi, log_phi = _inputs(prior, log_psi, log_phi)
    stride = stride or max(1, math.isqrt(n))
    if not tracked:
        return _q_point(prior, log_psi, log_phi, stride)
    if not generic:
        return _q_tracked(prior, log_psi, log_phi, stride)
    trans = _Transitions(prior, tracked)

    # forward sweep keeping checkpoints F_0, F_stride, ...
    checkpoints = {}
    col = _start(tracked)
    for i in range(n):
        if i % stride == 0:
            checkpoints[i] = col
        stay, jump = _forward_step(col, trans(i), log_psi[i : i + 1], log_phi[i : i + 1])
        col = _combine(stay, jump)
    log_marginal = lsumexp(col)

    one = [None] * n
    zero = [None] * n
    g = _zeros(n + 1, tracked)
    block_start = ((n - 1) // stride) * stride
    while block_start >= 0:
        block_end = min(block_start + stride, n)
        cols = [checkpoints[block_start]]
        transitions = []
        for i in range(block_start, block_end):
            tr = trans(i)
            transitions.append(tr)
            if i + 1 < block_end:
                stay, jump = _forward_step(cols[-1], tr, log_psi[i : i + 1], log_phi[i : i + 1])
                cols.append(_combine(stay, jump))
        for i in range(block_end - 1, block_start - 1, -1):
            # coordinate i+1 (1-based) uses F_i, transitions out of step i and G_{i+1}
            tr = transitions[i - block_start]
            stay, jump = _forward_step(cols[i - block_start], tr, log_psi[i : i + 1], log_phi[i : i + 1])
            zero[i] = lsumexp(lmul(stay, g[:-1]))
            one[i] = lsumexp(lmul(jump, g[1:]))
            g = _backward_step(g, tr, log_psi[i : i + 1], log_phi[i : i + 1])
        block_start -= stride

    if tracked:
        log_one = LogInterval(np.array([float(x.lo) for x in one]), np.array([float(x.hi) for x in one]),
                              any(x.partial for x in one))
        log_zero = LogInterval(np.array([float(x.lo) for x in zero]), np.array([float(x.hi) for x in zero]),
                               any(x.partial for x in zero))
    else:
        log_one, log_zero = np.array(one, dtype=float), np.array(zero, dtype=float)
    return from_odds(log_one, log_zero, log_marginal, "hmm")


def state_posteriors(prior: ModelSelectionPrior, log_psi, log_phi):
    """Posterior over states ``(b, m)`` at every position; shape ``(2, i+1)`` per ``i``.

    ``O(n^2)`` memory; intended for diagnostics and small ``n``.
    """
    fwd, log_marginal = forward_pass(prior, log_psi, log_phi)
    bwd = backward_pass(prior, log_psi, log_phi)
    out = []
    for i in range(1, len(fwd)):
        f = np.asarray(fwd[i])
        out.append(np.exp(f + np.asarray(bwd[i])[None, :] - float(log_marginal)))
    return out


class _PointTransitions:
    """Transition logs with the per-step cost kept to slicing.

    ``side`` is ``None`` for plain floats, or ``"lo"`` / ``"hi"`` for one end
    of a tracked computation.  For beta-binomial priors ``ln(kappa + m)``,
    ``ln(lam + k)`` and ``ln(kappa + lam + i)`` are tabulated once; other
    priors read neighbouring v-table rows.
    """

    def __init__(self, prior: ModelSelectionPrior, side: str | None = None, vtable=None):
        n = prior.n
        self.prior = prior
        self.side = side
        self.vtable = None
        if prior.is_beta_binomial:
            kappa, lam = prior.params["kappa"], prior.params["lambda"]
            idx = np.arange(n + 1.0)
            if side is None:
                self.log_one = np.log(kappa + idx)
                self.log_zero_rev = np.log(lam + idx)[::-1].copy()
                self.log_tot = np.log(kappa + lam + idx)
            else:
                up = side == "hi"
                # numerators rounded toward the side, the total away from it
                num_add = add_up if up else add_down
                den_add = add_down if up else add_up
                num_log = log_up if up else log_down
                den_log = log_down if up else log_up
                self.log_one = num_log(num_add(kappa, idx))
                self.log_zero_rev = num_log(num_add(lam, idx))[::-1].copy()
                self.log_tot = den_log(den_add(den_add(kappa, lam), idx))
        else:
            self.vtable = vtable if vtable is not None else VTable(prior, side is not None)

    def __call__(self, i: int):
        if self.vtable is None:
            n = self.prior.n
            c = self.log_tot[i]
            if self.side is None:
                return self.log_zero_rev[n - i :] - c, self.log_one[: i + 1] - c
            sub = sub_up if self.side == "hi" else sub_down
            return sub(self.log_zero_rev[n - i :], c), sub(self.log_one[: i + 1], c)
        t0, t1 = log_transition(self.prior, i, self.vtable, self.side is not None)
        if self.side is None:
            return t0, t1
        return (t0.hi, t1.hi) if self.side == "hi" else (t0.lo, t1.lo)

    def parts(self, i: int):
        """``(u0, u1, c)`` with transitions ``u0 - c`` and ``u1 - c``.

        In plain beta-binomial mode ``u0``/``u1`` are views, so the caller
        can fold ``c`` into its per-step scalar instead of building two new
        arrays; everywhere else ``c`` is zero.
        """
        if self.vtable is None and self.side is None:
            n = self.prior.n
            return self.log_zero_rev[n - i :], self.log_one[: i + 1], self.log_tot[i]
        t0, t1 = self(i)
        return t0, t1, 0.0


# retain the whole forward trellis below this many bytes, else checkpoint
FULL_TRELLIS_BYTES = 1 << 30


def _lse(x: np.ndarray) -> float:
    m = x.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.exp(x - m).sum()))


def _lse_rows(z: np.ndarray) -> np.ndarray:
    # callers silence divide warnings: log(0) = -inf is intended
    m = z.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    return safe + np.log(np.exp(z - safe[:, None]).sum(axis=1))


class _Ops:
    """Arithmetic used by the sweep: plain, or rounded toward one side."""

    def __init__(self, side: str | None):
        if side is None:
            self.add = np.add
            self.lae = np.logaddexp
            self.lse_rows = _lse_rows
            self.lse = _lse
        else:
            up = side == "hi"
            self.add = fast_add_up if up else fast_add_down
            self.lae = fast_logaddexp_up if up else fast_logaddexp_down
            self.lse_rows = lambda z: lse_bounds(z, up, axis=1)
            self.lse = lambda x: float(lse_bounds(x, up))


def _step(ops, col, t0, t1, lph, lps, out):
    """``out[: i + 2] = F_{i+1}`` from ``col = F_i``."""
    k = col.size
    stay = ops.add(col, t0)
    stay = ops.add(stay, lph, out=stay)
    jump = ops.add(col, t1)
    jump = ops.add(jump, lps, out=jump)
    out[0] = stay[0]
    ops.lae(stay[1:], jump[:-1], out=out[1:k])
    out[k] = jump[-1]


def _sweep(prior, log_psi, log_phi, stride, side=None, vtable=None):
    """One forward-backward pass; returns ``(log p(Y, B_i=1), log p(Y, B_i=0), log Q)``."""
    # per-step scalars as Python floats: numpy scalar arithmetic dominates small n
    log_psi = np.asarray(log_psi, dtype=np.float64).tolist()
    log_phi = np.asarray(log_phi, dtype=np.float64).tolist()
    with np.errstate(divide="ignore"):
        return _sweep_body(prior, log_psi, log_phi, stride, side, vtable)


def _sweep_body(prior, log_psi, log_phi, stride, side, vtable):
    n = prior.n
    ops = _Ops(side)
    trans = _PointTransitions(prior, side, vtable)
    if 8 * n * (n + 3) // 2 <= FULL_TRELLIS_BYTES:
        stride = n
    checkpoints = {}
    block = []
    col = np.zeros(1)
    for i in range(n):
        if i % stride == 0:
            checkpoints[i] = col
        if stride == n:
            block.append(col)
        t0, t1, c = trans.parts(i)
        nxt = np.empty(i + 2)
        _step(ops, col, t0, t1, log_phi[i] - c, log_psi[i] - c, nxt)
        col = nxt
    log_marginal = ops.lse(col)

    log_odds = np.empty((n, 2))
    g = np.zeros(n + 1)
    g_next = np.empty(n + 1)
    pair = np.empty((2, n + 1))
    block_start = ((n - 1) // stride) * stride
    while block_start >= 0:
        block_end = min(block_start + stride, n)
        if stride != n:
            block = [checkpoints[block_start]]
            for i in range(block_start, block_end - 1):
                t0, t1, c = trans.parts(i)
                nxt = np.empty(i + 2)
                _step(ops, block[-1], t0, t1, log_phi[i] - c, log_psi[i] - c, nxt)
                block.append(nxt)
        for i in range(block_end - 1, block_start - 1, -1):
            t0, t1, c = trans.parts(i)
            gi = g[: i + 2]
            # a[m] = P(0|m) phi G(m), b[m] = P(1|m) psi G(m+1)
            a = ops.add(t0, gi[:-1])
            a = ops.add(a, log_phi[i] - c, out=a)
            b = ops.add(t1, gi[1:])
            b = ops.add(b, log_psi[i] - c, out=b)
            col = block[i - block_start]
            z = pair[:, : i + 1]
            ops.add(col, a, out=z[0])
            ops.add(col, b, out=z[1])
            log_odds[i] = ops.lse_rows(z)
            ops.lae(a, b, out=g_next[: i + 1])
            g, g_next = g_next, g
        block_start -= stride
    return log_odds[:, 1].copy(), log_odds[:, 0].copy(), log_marginal


def _q_point(prior, log_psi, log_phi, stride) -> InclusionProbs:
    one, zero, log_marginal = _sweep(prior, log_psi, log_phi, stride)
    return from_odds(one, zero, log_marginal, "hmm")


def _q_tracked(prior, log_psi: LogInterval, log_phi: LogInterval, stride) -> InclusionProbs:
    vtable = None if prior.is_beta_binomial else VTable(prior, tracked=True)
    one_lo, zero_lo, lq_lo = _sweep(prior, log_psi.lo, log_phi.lo, stride, "lo", vtable)
    one_hi, zero_hi, lq_hi = _sweep(prior, log_psi.hi, log_phi.hi, stride, "hi", vtable)
    return from_odds(LogInterval(one_lo, one_hi), LogInterval(zero_lo, zero_hi),
                     LogInterval(np.float64(lq_lo), np.float64(lq_hi)), "hmm")
