"""Command line entry point.

Settings are merged as defaults < ``--config`` JSON file < explicit flags.
Exit status: 0 success, 1 usage or input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..baselines import approx_error
from ..lognum import DomainError, NumericalError
from ..posterior import ALGORITHMS, compute
from ..representability import is_spike_slab
from . import io
from .bench import DEFAULT_TIME_LIMIT, BenchSpec, run_benchmark, run_experiment
from .simulate import EXPERIMENTS, ExperimentSpec, simulate
from .specs import parse_prior, parse_slab
from .zscore import soft_convert, write_matrix, zscore_ingest

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

DEFAULT_PRIOR = "beta-binomial:kappa=1,lambda=n+1"
DEFAULT_SLAB = "laplace:a=1"

DEFAULTS = {
    "posterior": {"input": "-", "output": "-", "prior": DEFAULT_PRIOR, "slab": DEFAULT_SLAB,
                  "algorithm": "hmm", "m": 20, "tracked": False, "threshold": 0.5, "seed": None,
                  "timing": True},
    "simulate": {"experiment": "accuracy", "n": 1000, "seed": 0, "replication": 0, "permuted": False,
                 "output": "-", "truth": None},
    "zscore": {"output": "-"},
    "soft-convert": {"subset_type": "disease state"},
    "bench": {"algorithms": ["hmm"], "sizes": [1000], "experiment": "accuracy", "prior": DEFAULT_PRIOR,
              "slab": DEFAULT_SLAB, "tracked": False, "m": 20, "seed": 0, "repeats": 1,
              "time_limit": DEFAULT_TIME_LIMIT, "output": None},
    "experiment": {"experiment": "A1", "sizes": [1000], "replications": 20, "seed": 0,
                   "prior": DEFAULT_PRIOR, "slab": DEFAULT_SLAB, "algorithm": "hmm", "m": 20,
                   "output": None},
    "represent": {"grid_size": 1001},
    "compare": {"prior": DEFAULT_PRIOR, "slab": DEFAULT_SLAB, "algorithm": "hmm", "m": 20},
}

REQUIRED = {
    "zscore": ("group_a", "group_b"),
    "soft-convert": ("input", "label_a", "label_b", "out_a", "out_b"),
    "represent": ("prior", "n"),
    "compare": ("input", "q"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sizes(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _names(text):
    return [v for v in str(text).replace(",", " ").split() if v]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exactsparse", description="Exact posterior computations for spike-and-slab priors.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sup = argparse.SUPPRESS

    def add(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=sup)
        p.add_argument("--config", help="JSON file with settings for this command")
        return p

    p = add("posterior", "marginal posterior summaries for an observation vector")
    p.add_argument("--input", help="file of observations, '-' for stdin")
    p.add_argument("--output", help="result file (JSON lines), '-' for stdout")
    p.add_argument("--prior", help="e.g. beta-binomial:kappa=1,lambda=n+1")
    p.add_argument("--slab", help="e.g. laplace:a=1 or gaussian:v=1")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--m", type=int)
    p.add_argument("--tracked", action="store_true")
    p.add_argument("--threshold", type=float)
    p.add_argument("--seed", type=int, help="recorded in the header")
    p.add_argument("--no-timing", dest="timing", action="store_false", help="omit runtime for byte-stable output")

    p = add("simulate", "draw data from one of the experiment designs")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replication", type=int)
    p.add_argument("--permuted", action="store_true")
    p.add_argument("--output")
    p.add_argument("--truth", help="also write the true signal here")

    p = add("zscore", "Welch Z-scores from two expression matrices")
    p.add_argument("--group-a", dest="group_a")
    p.add_argument("--group-b", dest="group_b")
    p.add_argument("--output")

    p = add("soft-convert", "split a GEO SOFT dataset table into two matrices")
    p.add_argument("--input")
    p.add_argument("--label-a", dest="label_a")
    p.add_argument("--label-b", dest="label_b")
    p.add_argument("--out-a", dest="out_a")
    p.add_argument("--out-b", dest="out_b")
    p.add_argument("--subset-type", dest="subset_type")

    p = add("bench", "runtime and accuracy over algorithms and sizes")
    p.add_argument("--algorithms", type=_names)
    p.add_argument("--sizes", type=_sizes)
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--prior")
    p.add_argument("--slab")
    p.add_argument("--tracked", action="store_true")
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--time-limit", dest="time_limit", type=float)
    p.add_argument("--output")

    p = add("experiment", "replicated l2 / FDR / TPR study")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--sizes", type=_sizes)
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--prior")
    p.add_argument("--slab")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--m", type=int)
    p.add_argument("--output")

    p = add("represent", "is a prior on the number of nonzeros a spike-and-slab prior?")
    p.add_argument("--prior")
    p.add_argument("--n", type=int)
    p.add_argument("--grid-size", dest="grid_size", type=int)

    p = add("compare", "score an external inclusion-probability vector against the exact one")
    p.add_argument("--input", help="observations")
    p.add_argument("--q", help="approximate inclusion probabilities, same order")
    p.add_argument("--prior")
    p.add_argument("--slab")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--m", type=int)
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (later wins)."""
    settings = dict(DEFAULTS.get(command, {}))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        settings.update({k.replace("-", "_"): v for k, v in config.items()})
    settings.update(flags)
    missing = [k for k in REQUIRED.get(command, ()) if settings.get(k) is None]
    if missing:
        raise UsageError(f"{command}: missing {', '.join('--' + k.replace('_', '-') for k in missing)}")
    return settings


def _emit(path, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def cmd_posterior(s):
    y = io.read_vector(s["input"])
    if y.size == 0:
        raise UsageError("no observations")
    summary = compute(parse_prior(s["prior"], y.size), parse_slab(s["slab"]), y, s["algorithm"],
                      tracked=bool(s["tracked"]), m=int(s["m"]), threshold=float(s["threshold"]))
    io.write_summary(s["output"], summary, prior=s["prior"], slab=s["slab"], seed=s["seed"],
                     include_timing=bool(s["timing"]))


def cmd_simulate(s):
    spec = ExperimentSpec(s["experiment"], [int(s["n"])], seed=int(s["seed"]), permuted=bool(s["permuted"]))
    y, theta, _ = simulate(spec, replication=int(s["replication"]))
    io.write_vector(s["output"], y)
    if s["truth"]:
        io.write_vector(s["truth"], theta)


def cmd_zscore(s):
    genes, z = zscore_ingest(s["group_a"], s["group_b"])
    text = "gene\tz\n" + "".join(f"{g}\t{float(v)!r}\n" for g, v in zip(genes, z))
    io._write(s["output"], text)


def cmd_soft_convert(s):
    a, b = soft_convert(s["input"], s["label_a"], s["label_b"], s["subset_type"])
    write_matrix(s["out_a"], a)
    write_matrix(s["out_b"], b)


def cmd_bench(s):
    keys = ("algorithms", "sizes", "experiment", "prior", "slab", "tracked", "m", "seed", "repeats", "time_limit")
    spec = BenchSpec(**{k: s[k] for k in keys})
    report = run_benchmark(spec, log=lambda c: print(
        f"{c.algorithm:>9} n={c.n:<7} {c.status:<8} "
        f"{'' if c.runtime is None else f'{c.runtime:.3f}s'}", file=sys.stderr))
    _emit(s["output"], report)


def cmd_experiment(s):
    spec = ExperimentSpec(s["experiment"], list(s["sizes"]), int(s["replications"]), int(s["seed"]),
                          s["prior"], s["slab"], s["algorithm"])
    _emit(s["output"], run_experiment(spec, int(s["m"])))


def cmd_represent(s):
    verdict = is_spike_slab(parse_prior(s["prior"], int(s["n"])), int(s["grid_size"]))
    _emit("-", {"prior": s["prior"], "n": int(s["n"]), **verdict.to_dict()})


def cmd_compare(s):
    y = io.read_vector(s["input"])
    q_ext = io.read_vector(s["q"])
    if q_ext.size != y.size:
        raise UsageError(f"{y.size} observations but {q_ext.size} probabilities")
    if not ((q_ext >= 0) & (q_ext <= 1)).all():
        raise UsageError("probabilities must lie in [0, 1]")
    summary = compute(parse_prior(s["prior"], y.size), parse_slab(s["slab"]), y, s["algorithm"],
                      m=int(s["m"]), medians=False)
    _emit("-", {"n": int(y.size), "algorithm": summary.algorithm, "max_error": approx_error(summary.q, q_ext),
                "argmax": int(np.argmax(np.abs(summary.q - q_ext)))})


COMMANDS = {
    "posterior": cmd_posterior, "simulate": cmd_simulate, "zscore": cmd_zscore,
    "soft-convert": cmd_soft_convert, "bench": cmd_bench, "experiment": cmd_experiment,
    "represent": cmd_represent, "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        COMMANDS[args.command](resolve(args.command, args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, DomainError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
