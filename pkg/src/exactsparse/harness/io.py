"""JSON-lines result files: one header line, then one line per coordinate."""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RECORD_FIELDS = ("index", "y", "q", "q_lo", "q_hi", "mean", "median", "selected")
FORMAT = "exactsparse-summary/1"


@dataclass
class SummaryFile:
    header: dict
    table: dict

    def __eq__(self, other):
        if not isinstance(other, SummaryFile) or self.header != other.header:
            return False
        return all(np.array_equal(self.table[k], other.table[k], equal_nan=k not in ("index", "selected"))
                   for k in RECORD_FIELDS)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _unnum(x):
    return float(x)


def make_header(summary, prior: str = "", slab: str = "", seed=None, include_timing: bool = True,
                extra: dict | None = None) -> dict:
    head = {
        "format": FORMAT,
        "algorithm": summary.algorithm,
        "prior": prior,
        "slab": slab,
        "seed": seed,
        "n": int(summary.n),
        "threshold": float(summary.threshold),
        "log_marginal": _num(summary.log_marginal),
        "max_width": _num(summary.max_width),
    }
    if summary.log_marginal_bounds is not None:
        head["log_marginal_bounds"] = [_num(v) for v in summary.log_marginal_bounds]
    if summary.epsilon is not None:
        eps = summary.epsilon
        head["epsilon_bound"] = {"epsilon": _num(eps.epsilon), "epsilon_prime": _num(eps.epsilon_prime),
                                 "ratio_min": _num(eps.ratio_min), "ratio_max": _num(eps.ratio_max),
                                 "fastforward": bool(eps.fastforward)}
    if include_timing:
        head["runtime"] = float(summary.runtime)
    if extra:
        head.update(extra)
    return head


def summary_table(summary) -> dict:
    n = summary.n
    return {
        "index": np.arange(n), "y": summary.y, "q": summary.q, "q_lo": summary.q_lo, "q_hi": summary.q_hi,
        "mean": summary.mean, "median": summary.median, "selected": summary.selected.astype(bool),
    }


def dumps(header: dict, table: dict) -> str:
    lines = [json.dumps({"type": "header", **header}, sort_keys=True)]
    n = len(table["index"])
    for i in range(n):
        rec = {"index": int(table["index"][i]), "selected": bool(table["selected"][i])}
        for key in ("y", "q", "q_lo", "q_hi", "mean", "median"):
            rec[key] = _num(table[key][i])
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def loads(text: str) -> SummaryFile:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty result file")
    header = json.loads(lines[0])
    if header.pop("type", None) != "header" or header.get("format") != FORMAT:
        raise ValueError("first line is not a result header")
    recs = [json.loads(ln) for ln in lines[1:]]
    table = {
        "index": np.array([r["index"] for r in recs], dtype=np.int64),
        "selected": np.array([r["selected"] for r in recs], dtype=bool),
    }
    for key in ("y", "q", "q_lo", "q_hi", "mean", "median"):
        table[key] = np.array([_unnum(r[key]) for r in recs], dtype=np.float64)
    if header.get("n") != len(recs):
        raise ValueError(f"header announces {header.get('n')} records, file has {len(recs)}")
    return SummaryFile(header, table)


def write_summary(path, summary, **header_kw) -> str:
    text = dumps(make_header(summary, **header_kw), summary_table(summary))
    _write(path, text)
    return text


def read_summary(path) -> SummaryFile:
    return loads(_read(path))


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text()


def read_vector(path) -> np.ndarray:
    """Whitespace/comma separated numbers; ``#`` starts a comment."""
    text = _read(path)
    vals = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].replace(",", " ")
        vals.extend(float(tok) for tok in line.split())
    return np.array(vals, dtype=np.float64)


def write_vector(path, values) -> None:
    _write(path, "".join(f"{float(v)!r}\n" for v in values))
