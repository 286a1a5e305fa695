from .bench import BenchSpec, loglog_slope, run_benchmark, run_experiment
from .io import read_summary, write_summary
from .metrics import MetricsRow, metrics
from .simulate import ExperimentSpec, simulate
from .specs import parse_prior, parse_slab
from .zscore import soft_convert, zscore_ingest, zscores

__all__ = [
    "BenchSpec", "ExperimentSpec", "MetricsRow", "loglog_slope", "metrics", "parse_prior", "parse_slab",
    "read_summary", "run_benchmark", "run_experiment", "simulate", "soft_convert", "write_summary",
    "zscore_ingest", "zscores",
]
