# SPDX-License-Identifier: Apache-2.0
"""Temporal attentive relation network: Python front end to the C++ core."""

import json as _json

from . import _tarn
from ._tarn import TarnError, attention, compare, episode_loss, load_dataset, predict

__all__ = [
    "TarnError",
    "attention",
    "compare",
    "episode_loss",
    "eval",
    "gradcheck",
    "load_dataset",
    "predict",
    "synth",
    "train",
]


def _dump(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def _last_json(result):
    for line in reversed(result.out.splitlines()):
        if line.startswith("{"):
            return _json.loads(line)
    return None


def _run(result):
    if result.code != 0:
        raise TarnError(f"exit {result.code}: {result.err.strip()}")
    return _last_json(result)


def synth(spec, out_dir):
    """Writes a synthetic dataset; returns the summary dict."""
    return _run(_tarn.synth(_dump(spec), str(out_dir)))


def train(config):
    """Trains per `config`; returns the summary dict."""
    return _run(_tarn.train(_dump(config)))


def eval(config, checkpoint, threads=1):  # noqa: A001
    """Evaluates a checkpoint on test episodes; returns the summary dict."""
    return _run(_tarn.eval(_dump(config), str(checkpoint), threads))


def gradcheck(config, inject_fault=None):
    """Returns (passed, summary dict); never raises on a failed check."""
    result = _tarn.gradcheck(_dump(config), inject_fault)
    if result.code not in (0, 3):
        raise TarnError(f"exit {result.code}: {result.err.strip()}")
    return result.code == 0, _last_json(result)
