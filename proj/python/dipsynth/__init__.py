# Copyright 2026 The dipsynth Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Differentially private synthetic data with combining-rule inference."""

import json
import math

import numpy as np

from . import _dipsynth
from ._dipsynth import (
    BudgetExceeded,
    DataError,
    Error,
    InvalidArgument,
    NumericalError,
    degrees_freedom,
    latent_corr_for_binary,
    pooled_variance,
    quantile_normal,
    quantile_t,
)

__all__ = [
    "BudgetExceeded",
    "DataError",
    "Error",
    "InvalidArgument",
    "NumericalError",
    "combine",
    "degrees_freedom",
    "estimate",
    "generate",
    "laplace_mechanism",
    "latent_corr_for_binary",
    "pooled_variance",
    "quantile_normal",
    "quantile_t",
    "simulate",
    "synthesize",
]

__version__ = "0.1.0"


def _schema_text(schema):
    return schema if isinstance(schema, str) else json.dumps(schema)


def _cells(data):
    return np.ascontiguousarray(np.asarray(data, dtype=np.float64))


def _epsilon(value):
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return math.inf
        return float(value)
    return float(value)


def _decode(value):
    if isinstance(value, str) and value in ("inf", "-inf", "nan"):
        return float(value)
    return value


def synthesize(data, schema, method, epsilon, m, seed, *, bins=20, bn_degree=1,
               out_n=None, semantics="replacement", fixed_chain=False):
    """Generates m synthetic copies of `data` (an n x p array) under `schema`.

    Returns (copies, ledger, models): a list of arrays, the privacy ledger as a
    dict and one summary dict per fitted model.
    """
    copies, ledger, models = _dipsynth.synthesize(
        _cells(data), _schema_text(schema), method, _epsilon(epsilon), m, seed, bins,
        bn_degree, out_n, semantics, fixed_chain)
    return copies, json.loads(ledger), json.loads(models)


def estimate(data, schema, estimand):
    """Returns (q, u, n_used) for an estimand such as "mean:y1" or "ols:y1~y2#y2"."""
    return _dipsynth.estimate(_cells(data), _schema_text(schema), estimand)


def combine(q, u, rule="tp", level=0.95, estimand=""):
    """Combines per-copy estimates q and variances u into one inference dict."""
    out = json.loads(_dipsynth.combine(list(map(float, q)), list(map(float, u)), rule, level,
                                       estimand))
    return {k: _decode(v) for k, v in out.items()}


def generate(simulation, n, seed, stream=0):
    """Draws one dataset from "sim1", "sim2" or "sim3": (cells, schema, truths)."""
    cells, schema, truths = _dipsynth.generate(simulation, n, seed, stream)
    return cells, json.loads(schema), dict(truths)


def laplace_mechanism(values, sensitivity, epsilon, seed, stream=0):
    return np.asarray(_dipsynth.laplace_mechanism(
        list(map(float, values)), sensitivity, _epsilon(epsilon), seed, stream))


def simulate(config, seed=None, jobs=1, out_dir=None):
    """Runs an experiment from TOML text; returns config, cells and failed arms.

    When out_dir is given the report tables and replication archive are written
    there as well.
    """
    doc = json.loads(_dipsynth.simulate(config, seed, jobs,
                                        None if out_dir is None else str(out_dir)))
    for cell in doc["cells"]:
        for key, value in list(cell.items()):
            cell[key] = _decode(value)
        for metrics in cell["rules"].values():
            for key, value in list(metrics.items()):
                metrics[key] = _decode(value)
    return doc
