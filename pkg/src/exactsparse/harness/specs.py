"""Parsing of prior and slab descriptions such as ``beta-binomial:kappa=1,lambda=n+1``.

Parameter values are arithmetic expressions in ``n``; they are evaluated by
walking the syntax tree, so nothing is ever passed to ``eval``.
"""
from __future__ import annotations

import ast
import math
import operator
from pathlib import Path

import numpy as np

from ..priors import ModelSelectionPrior, make_prior
from ..slabs import Slab, make_slab

_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "log": math.log, "exp": math.exp, "ceil": math.ceil, "floor": math.floor}
_CONSTS = {"pi": math.pi, "e": math.e}

SLAB_PARAM_NAMES = {"laplace": "a", "gaussian": "v", "normal": "v", "cauchy": "scale"}


def evaluate(expr: str, n: int | None = None) -> float:
    """Value of an arithmetic expression with optional variable ``n``."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {expr!r}") from exc
    return float(_eval(tree.body, n, expr))


def _eval(node, n, src):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name):
        if node.id == "n":
            if n is None:
                raise ValueError(f"{src!r} refers to n but no n is known")
            return n
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ValueError(f"unknown name {node.id!r} in {src!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        return _BINARY[type(node.op)](_eval(node.left, n, src), _eval(node.right, n, src))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand, n, src))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0], n, src))
    raise ValueError(f"unsupported expression in {src!r}")


def _split(spec: str):
    family, _, rest = spec.partition(":")
    family = family.strip().lower()
    if not family:
        raise ValueError("empty family name")
    items = [p for p in rest.split(",") if p.strip()] if rest else []
    return family, items


def parse_prior(spec: str, n: int) -> ModelSelectionPrior:
    """``family:key=expr,...``; ``custom:weights=@file`` reads ``n + 1`` weights."""
    family, items = _split(spec)
    params = {}
    for item in items:
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"prior parameter {item!r} is not key=value")
        key, value = key.strip(), value.strip()
        if value.startswith("@"):
            params[key] = np.loadtxt(Path(value[1:]), dtype=np.float64).ravel()
        else:
            params[key] = evaluate(value, n)
    try:
        return make_prior(family, n, **params)
    except KeyError as exc:
        raise ValueError(f"prior {family!r} needs parameter {exc.args[0]!r}") from exc


def parse_slab(spec: str) -> Slab:
    """``laplace:a=1``, ``gaussian:v=1``, ``cauchy:1`` (a bare value is accepted)."""
    family, items = _split(spec)
    if len(items) > 1:
        raise ValueError("slabs take at most one parameter")
    param = None
    if items:
        key, eq, value = items[0].partition("=")
        if eq and key.strip() != SLAB_PARAM_NAMES.get(family, key.strip()):
            raise ValueError(f"slab {family!r} has no parameter {key.strip()!r}")
        param = evaluate(value if eq else key)
    return make_slab(family, param)
