from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class MetricsRow:
    l2_error: float
    fdr: float
    tpr: float
    runtime: float = 0.0
    max_interval_width: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def selection_metrics(selected, support, n: int) -> tuple[float, float]:
    """``(FDR, TPR)`` with ``FDR = 0`` for an empty selection."""
    sel = np.asarray(selected, dtype=bool)
    truth = np.zeros(n, dtype=bool)
    truth[np.asarray(support, dtype=int)] = True
    tp = int(np.sum(sel & truth))
    fp = int(np.sum(sel & ~truth))
    return fp / max(fp + tp, 1), tp / max(int(truth.sum()), 1)


def metrics(summary, theta_true, support) -> MetricsRow:
    theta = np.asarray(theta_true, dtype=np.float64)
    if summary.mean.shape != theta.shape:
        raise ValueError("summary and truth differ in length")
    fdr, tpr = selection_metrics(summary.selected, support, theta.size)
    return MetricsRow(float(np.linalg.norm(summary.mean - theta)), fdr, tpr,
                      float(summary.runtime), float(summary.max_width))
