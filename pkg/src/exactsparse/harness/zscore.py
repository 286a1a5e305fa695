"""Gene-expression ingestion: text matrices, GEO SOFT dataset tables, Welch Z-scores."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class ExpressionMatrix:
    genes: list
    samples: list
    values: np.ndarray  # genes x samples


def _dialect(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def read_matrix(path) -> ExpressionMatrix:
    """Genes in rows, patients in columns, header row of sample IDs, first column gene IDs."""
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline()
        fh.seek(0)
        rows = list(csv.reader(fh, delimiter=_dialect(first)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header and at least one gene row")
    samples = [c.strip() for c in rows[0][1:]]
    genes, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(samples) + 1:
            raise ValueError(f"{path}:{lineno}: expected {len(samples) + 1} fields, got {len(row)}")
        genes.append(row[0].strip())
        try:
            vals.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return ExpressionMatrix(genes, samples, np.array(vals, dtype=np.float64).reshape(len(genes), len(samples)))


def write_matrix(path, matrix: ExpressionMatrix) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["ID_REF", *matrix.samples])
        for gene, row in zip(matrix.genes, matrix.values):
            w.writerow([gene, *(repr(float(v)) for v in row)])


def zscores(group_a, group_b) -> np.ndarray:
    """Welch-type Z per gene from two ``genes x patients`` intensity arrays."""
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("intensity matrices must be two-dimensional")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"gene counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] < 2 or b.shape[1] < 2:
        raise ValueError("each group needs at least two patients")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("intensities must be finite")
    if (a <= 0).any() or (b <= 0).any():
        raise ValueError("intensities must be strictly positive")
    la = np.log(a / a.sum(axis=0, keepdims=True))
    lb = np.log(b / b.sum(axis=0, keepdims=True))
    se = np.sqrt(la.var(axis=1, ddof=1) / a.shape[1] + lb.var(axis=1, ddof=1) / b.shape[1])
    diff = la.mean(axis=1) - lb.mean(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = diff / se
    # genes with no spread and no difference carry no signal
    z[(se == 0) & (diff == 0)] = 0.0
    if not np.isfinite(z).all():
        raise ValueError("zero standard error with a nonzero mean difference")
    return z


def zscore_ingest(path_a, path_b):
    """``(gene_ids, Z)`` from two matrix files sharing their gene rows."""
    ma, mb = read_matrix(path_a), read_matrix(path_b)
    if ma.genes != mb.genes:
        raise ValueError("the two matrices list different genes")
    return ma.genes, zscores(ma.values, mb.values)


def _soft_value(line: str) -> tuple[str, str]:
    key, _, value = line.partition("=")
    return key.strip(), value.strip()


def read_soft_subsets(path, subset_type: str = "disease state"):
    """Subset description -> sample IDs, restricted to one subset type."""
    subsets, current = {}, None
    with Path(path).open(encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("^"):
                if current is not None:
                    _store_subset(subsets, current, subset_type)
                current = {"description": None, "samples": [], "type": None} if line.startswith("^SUBSET") else None
            elif current is not None and line.startswith("!subset_"):
                key, value = _soft_value(line)
                if key == "!subset_description":
                    current["description"] = value
                elif key == "!subset_sample_id":
                    current["samples"].extend(s.strip() for s in value.split(",") if s.strip())
                elif key == "!subset_type":
                    current["type"] = value
            if line.startswith("!dataset_table_begin"):
                break
    if current is not None:
        _store_subset(subsets, current, subset_type)
    return subsets


def _store_subset(subsets, sub, subset_type):
    if sub["type"] is not None and sub["type"].lower() == subset_type.lower() and sub["description"]:
        subsets.setdefault(sub["description"], []).extend(sub["samples"])


def soft_convert(path, label_a: str, label_b: str, subset_type: str = "disease state"):
    """Split the dataset table of a SOFT file into two expression matrices."""
    subsets = read_soft_subsets(path, subset_type)
    for label in (label_a, label_b):
        if label not in subsets:
            raise ValueError(f"subset {label!r} not found; available: {sorted(subsets)}")
    header, rows, inside = None, [], False
    with Path(path).open(encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("!dataset_table_begin"):
                inside = True
                continue
            if line.startswith("!dataset_table_end"):
                break
            if not inside:
                continue
            fields = line.split("\t")
            if header is None:
                header = fields
            else:
                rows.append(fields)
    if header is None:
        raise ValueError("no dataset table in file")
    col = {name: j for j, name in enumerate(header)}
    out = []
    for label in (label_a, label_b):
        missing = [s for s in subsets[label] if s not in col]
        if missing:
            raise ValueError(f"samples {missing[:3]} of subset {label!r} are not in the table")
        idx = [col[s] for s in subsets[label]]
        vals = np.array([[_soft_float(r[j]) for j in idx] for r in rows], dtype=np.float64)
        out.append(ExpressionMatrix([r[0] for r in rows], list(subsets[label]), vals))
    return out[0], out[1]


def _soft_float(text: str) -> float:
    text = text.strip()
    if text.lower() in ("", "null", "na", "nan"):
        return float("nan")
    return float(text)
