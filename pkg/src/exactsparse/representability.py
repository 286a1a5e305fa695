"""Can a prior on the number of nonzeros be written as a spike-and-slab prior?

A model selection prior comes from mixing i.i.d. Bernoulli(``α``) inclusions
over some law of ``α`` exactly when the pattern probabilities
``μ_s = π(s) / C(n, s)`` (with the last entry replaced by a free ``c`` in
``[0, π(n)]``) satisfy Hankel positivity and range conditions.  This module
evaluates those conditions numerically and searches over ``c``.

Every condition is turned into a signed margin (``>= 0`` means satisfied) so
that the search can maximise the smallest of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .priors import ModelSelectionPrior, log_binom

PSD_TOL = 1e-10
RANGE_TOL = 1e-8
GRID_SIZE = 1001
REFINE_TOL = 1e-10

CONDITIONS = ("hankel", "shifted_hankel", "range")


def hankel(mu, k: int) -> np.ndarray:
    """``(k+1) x (k+1)`` matrix with entry ``(i, j) = mu[i + j]``."""
    mu = np.asarray(mu, dtype=np.float64)
    if k < 0:
        return np.zeros((0, 0))
    if mu.size < 2 * k + 1:
        raise ValueError(f"need at least {2 * k + 1} entries for order {k}, got {mu.size}")
    idx = np.arange(k + 1)
    return mu[idx[:, None] + idx[None, :]]


def moment_vector(prior: ModelSelectionPrior, c: float) -> np.ndarray:
    n = prior.n
    mu = np.exp(prior.log_pmf - log_binom(n, np.arange(n + 1)))
    mu[n] = c
    return mu


def _psd_margin(mat: np.ndarray) -> tuple[float, float]:
    if mat.size == 0:
        return math.inf, math.inf
    eig = float(np.linalg.eigvalsh(mat)[0])
    scale = 1.0 + float(np.linalg.norm(mat))
    return eig / scale + PSD_TOL, eig


def _range_margin(mat: np.ndarray, vec: np.ndarray) -> tuple[float, float]:
    norm_v = float(np.linalg.norm(vec))
    if norm_v == 0.0:
        return RANGE_TOL, 0.0
    if mat.size == 0:
        return RANGE_TOL - 1.0, 1.0
    sol, *_ = np.linalg.lstsq(mat, vec, rcond=None)
    rel = float(np.linalg.norm(mat @ sol - vec)) / norm_v
    return RANGE_TOL - rel, rel


def _matrices(mu: np.ndarray, n: int):
    """The two Hankel matrices, the range target and the matrix it must lie in."""
    shifted = mu[1:]
    if n % 2:
        k = (n - 1) // 2
        h, hf = hankel(mu, k), hankel(shifted, k)
        return h, hf, mu[k + 1 : 2 * k + 2], h
    k = n // 2
    h, hf = hankel(mu, k), hankel(shifted, k - 1)
    return h, hf, mu[k + 1 : 2 * k + 1], hf


def leading_minors(mat: np.ndarray) -> np.ndarray:
    """Determinants of the leading principal submatrices of orders ``1..size``."""
    return np.array([np.linalg.det(mat[:j, :j]) for j in range(1, mat.shape[0] + 1)])


def first_negative_minor(mat: np.ndarray, tol: float = PSD_TOL) -> int | None:
    """Order of the first leading principal minor below ``-tol * scale``."""
    minors = leading_minors(mat)
    for order, det in enumerate(minors, start=1):
        scale = float(np.linalg.norm(mat[:order, :order])) ** order
        if det < -tol * max(scale, 1e-300):
            return order
    return None


@dataclass
class CheckResult:
    c: float
    margins: dict
    min_eigenvalues: dict
    range_residual: float

    @property
    def margin(self) -> float:
        return min(self.margins.values())

    @property
    def passed(self) -> bool:
        return self.margin >= 0

    @property
    def violated(self) -> list:
        return [name for name in CONDITIONS if self.margins[name] < 0]


def check_at(prior: ModelSelectionPrior, c: float) -> CheckResult:
    """Evaluate all three conditions with the last moment set to ``c``."""
    n = prior.n
    mu = moment_vector(prior, c)
    h, hf, target, range_mat = _matrices(mu, n)
    m_h, e_h = _psd_margin(h)
    m_hf, e_hf = _psd_margin(hf)
    m_r, resid = _range_margin(range_mat, target)
    return CheckResult(
        c=float(c),
        margins={"hankel": m_h, "shifted_hankel": m_hf, "range": m_r},
        min_eigenvalues={"hankel": e_h, "shifted_hankel": e_hf},
        range_residual=resid,
    )


@dataclass
class RepresentabilityVerdict:
    representable: bool
    witness_c: float | None
    best: CheckResult
    violated: list = field(default_factory=list)
    negative_minor_order: int | None = None
    c_max: float = 0.0

    @property
    def margin(self) -> float:
        return self.best.margin

    def to_dict(self) -> dict:
        return {
            "representable": self.representable,
            "witness_c": self.witness_c,
            "c_max": self.c_max,
            "margin": self.margin,
            "violated": list(self.violated),
            "margins": dict(self.best.margins),
            "min_eigenvalues": dict(self.best.min_eigenvalues),
            "range_residual": self.best.range_residual,
            "negative_minor_order": self.negative_minor_order,
        }


def _golden_max(fn, lo: float, hi: float, tol: float):
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - ratio * (b - a), a + ratio * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + ratio * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - ratio * (b - a)
            f1 = fn(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def is_spike_slab(prior: ModelSelectionPrior, grid_size: int = GRID_SIZE) -> RepresentabilityVerdict:
    """Search ``c`` over ``[0, π(n)]`` for a point where all conditions hold."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    c_max = float(np.exp(prior.log_pmf[-1]))
    grid = np.linspace(0.0, c_max, grid_size)
    results = [check_at(prior, c) for c in grid]
    best_idx = int(np.argmax([r.margin for r in results]))
    best = results[best_idx]
    if not best.passed and c_max > 0:
        lo = grid[max(best_idx - 1, 0)]
        hi = grid[min(best_idx + 1, grid_size - 1)]
        c_ref, _ = _golden_max(lambda c: check_at(prior, c).margin, lo, hi, REFINE_TOL)
        refined = check_at(prior, c_ref)
        if refined.margin > best.margin:
            best = refined
    h = _matrices(moment_vector(prior, best.c), prior.n)[0]
    return RepresentabilityVerdict(
        representable=best.passed,
        witness_c=best.c if best.passed else None,
        best=best,
        violated=best.violated,
        negative_minor_order=first_negative_minor(h),
        c_max=c_max,
    )
