"""Timing and accuracy runs over an (algorithm, n) grid.

Each cell runs in a forked worker so that a run over its time limit can be
terminated and recorded instead of stalling the whole report.
"""
from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..posterior import ALGORITHMS, compute
from .metrics import metrics
from .simulate import ExperimentSpec, simulate
from .specs import parse_prior, parse_slab

DEFAULT_TIME_LIMIT = 1800.0


@dataclass
class BenchSpec:
    algorithms: list = field(default_factory=lambda: ["hmm"])
    sizes: list = field(default_factory=lambda: [1000])
    experiment: str = "accuracy"
    prior: str = "beta-binomial:kappa=1,lambda=n+1"
    slab: str = "laplace:a=1"
    tracked: bool = False
    m: int = 20
    seed: int = 0
    repeats: int = 1
    time_limit: float = DEFAULT_TIME_LIMIT

    def __post_init__(self):
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if self.repeats < 1 or self.time_limit <= 0:
            raise ValueError("repeats and time_limit must be positive")


@dataclass
class BenchCell:
    algorithm: str
    n: int
    status: str
    runtime: float | None = None
    max_width: float | None = None
    max_error: float | None = None


def _run_cell(spec: BenchSpec, algorithm: str, n: int, y):
    prior = parse_prior(spec.prior, n)
    slab = parse_slab(spec.slab)
    best, summary = np.inf, None
    for _ in range(spec.repeats):
        summary = compute(prior, slab, y, algorithm, tracked=spec.tracked and algorithm != "discrete",
                          m=spec.m, medians=False)
        best = min(best, summary.runtime)
    return best, summary.max_width, summary.q


def _worker(conn, spec, algorithm, n, y):
    try:
        conn.send(("ok", _run_cell(spec, algorithm, n, y)))
    except Exception as exc:  # reported as a failed cell
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def run_cell(spec: BenchSpec, algorithm: str, n: int, y, isolate: bool = True):
    """``(status, payload)``; status is ``ok``, ``timeout`` or ``error``."""
    if not isolate:
        try:
            return "ok", _run_cell(spec, algorithm, n, y)
        except Exception as exc:
            return "error", f"{type(exc).__name__}: {exc}"
    ctx = mp.get_context("fork")
    recv, send = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_worker, args=(send, spec, algorithm, n, y), daemon=True)
    proc.start()
    send.close()
    deadline = time.monotonic() + spec.time_limit
    result = None
    while result is None:
        if recv.poll(min(1.0, max(0.0, deadline - time.monotonic()))):
            try:
                result = recv.recv()
            except EOFError:
                result = ("error", "worker exited without a result")
        elif time.monotonic() >= deadline:
            proc.terminate()
            result = ("timeout", None)
        elif not proc.is_alive() and not recv.poll():
            result = ("error", f"worker exited with code {proc.exitcode}")
    proc.join()
    return result


def loglog_slope(sizes, times) -> float:
    """Least-squares slope of ``log t`` against ``log n``."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(times, dtype=np.float64))
    if x.size < 2:
        raise ValueError("need at least two sizes for a slope")
    return float(np.polyfit(x, y, 1)[0])


def run_benchmark(spec: BenchSpec, isolate: bool = True, log=None) -> dict:
    """Per-cell runtimes, widths and errors against the reference algorithm, plus slopes.

    The reference for ``max_error`` is the HMM result when it is part of the
    grid, else the first algorithm that finished.
    """
    exp = ExperimentSpec(spec.experiment, list(spec.sizes), seed=spec.seed)
    cells = []
    for n in spec.sizes:
        y, _, _ = simulate(exp, n=n)
        qs = {}
        for alg in spec.algorithms:
            status, payload = run_cell(spec, alg, n, y, isolate)
            cell = BenchCell(alg, int(n), status)
            if status == "ok":
                cell.runtime, cell.max_width, qs[alg] = payload
            elif status == "error":
                cell.status = f"error: {payload}"
            cells.append(cell)
            if log:
                log(cell)
        ref = "hmm" if "hmm" in qs else next(iter(qs), None)
        for cell in cells:
            if cell.n == n and cell.algorithm in qs:
                cell.max_error = float(np.max(np.abs(qs[cell.algorithm] - qs[ref])))
    slopes = {}
    for alg in spec.algorithms:
        done = [(c.n, c.runtime) for c in cells if c.algorithm == alg and c.status == "ok"]
        if len(done) >= 2:
            slopes[alg] = loglog_slope(*zip(*done))
    return {"spec": asdict(spec), "cells": [asdict(c) for c in cells], "slopes": slopes}


def run_experiment(spec: ExperimentSpec, m: int = 20) -> dict:
    """Replicated posterior runs with l2 / FDR / TPR per size (means and standard deviations)."""
    slab = parse_slab(spec.slab)
    out = {}
    for n in spec.n:
        prior = parse_prior(spec.prior, n)
        rows = []
        for rep in range(spec.replications):
            y, theta, support = simulate(spec, n=n, replication=rep)
            summary = compute(prior, slab, y, spec.algorithm, m=m)
            rows.append(metrics(summary, theta, support))
        arr = {k: np.array([getattr(r, k) for r in rows]) for k in ("l2_error", "fdr", "tpr", "runtime")}
        out[int(n)] = {
            "rows": [r.to_dict() for r in rows],
            **{f"mean_{k}": float(v.mean()) for k, v in arr.items()},
            **{f"sd_{k}": float(v.std(ddof=1)) if v.size > 1 else 0.0 for k, v in arr.items()},
        }
    return out
