"""Exact robustness verification for message-passing graph neural networks.

Models, graphs and specs are the JSON documents read by the command-line
tool; every function accepts them as dicts or as file paths.
"""

import json
import os

from . import _core
from ._core import InputError

__all__ = ["InputError", "aggregation_bounds", "predict", "verify", "oracle", "export_lp"]
__version__ = "0.1.0"


def _doc(obj):
    if obj is None:
        return ""
    if isinstance(obj, (str, os.PathLike)):
        with open(obj, encoding="utf-8") as fh:
            return fh.read()
    return json.dumps(obj)


def aggregation_bounds(aggr, fixed, deletable=(), insertable=(), budget=0, method="tightened"):
    """(lo, hi) of aggr over X1 ∪ X2' ∪ X3' with at most `budget` edits."""
    return _core.aggregation_bounds(aggr, list(fixed), list(deletable), list(insertable), budget, method)


def predict(model, graph, targets):
    return json.loads(_core.predict(_doc(model), _doc(graph), list(targets)))


def verify(model, graph, spec, targets, mode="incremental", objective="full", time_limit=300.0,
           workers=1, force=False):
    """Per-target verdicts and aggregate counts, as in the CLI report."""
    return json.loads(_core.verify(_doc(model), _doc(graph), _doc(spec), list(targets), mode, objective,
                                   time_limit, workers, force))


def oracle(model, graph, spec, target):
    return json.loads(_core.oracle(_doc(model), _doc(graph), _doc(spec), target))


def export_lp(model, graph, spec, target, objective="full"):
    return _core.export_lp(_doc(model), _doc(graph), _doc(spec), target, objective)
