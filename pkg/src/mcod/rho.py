"""Projection of instances into per-dimension conditional probabilities.

Row ``n`` of the projection holds, for each output column, the fitted
probability of the bit that was actually observed.  Scorers here work
directly on that matrix; the benchmark instead hands it to a detector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .chain import ChainModel, clamp_prob, design_matrix
from .data import Dataset


@dataclass(frozen=True)
class RhoMatrix:
    values: np.ndarray
    source_model_id: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("rho values must be an N x d matrix")
        v = clamp_prob(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class ReliabilityWeights:
    weights: np.ndarray
    mean_errors: np.ndarray


def transform(model: ChainModel, ds: Dataset) -> RhoMatrix:
    """Map every instance to the probabilities of its observed output bits.

    Parent features use the observed parent bits.  If the model carries an
    input scaling it is applied to ``ds.inputs`` first.
    """
    if ds.m != model.m or ds.d != model.d:
        raise ValueError(f"dataset shape (m={ds.m}, d={ds.d}) does not match model "
                         f"(m={model.m}, d={model.d})")
    x = model.prepare_inputs(ds.inputs)
    y = ds.outputs
    rho = np.empty((ds.n, ds.d))
    for i, dm in enumerate(model.dims):
        p1 = expit(design_matrix(x, y, model.order.parents[i]) @ dm.weights)
        rho[:, i] = np.where(y[:, i] == 1, p1, 1.0 - p1)
    return RhoMatrix(rho, model.model_id())


def neg_log_joint_score(rho: RhoMatrix) -> np.ndarray:
    """Negative log conditional joint, ``-sum_i log rho_i``, per row."""
    return -np.log(rho.values).sum(axis=1)


def reliability_weights(rho: RhoMatrix) -> ReliabilityWeights:
    """Inverse mean estimated error ``1 - rho`` of each column.

    Clamping keeps every error at least 1e-12, so weights are capped at 1e12.
    """
    err = 1.0 - rho.values
    n = rho.values.shape[0]
    return ReliabilityWeights(n / err.sum(axis=0), err.mean(axis=0))


def weighted_score(rho: RhoMatrix, w) -> np.ndarray:
    """``-sum_i w_i log rho_i`` per row; accepts ReliabilityWeights or a vector."""
    w = np.asarray(w.weights if isinstance(w, ReliabilityWeights) else w, dtype=float)
    if w.shape != (rho.values.shape[1],):
        raise ValueError(f"{w.shape[0] if w.ndim else 0} weights for {rho.values.shape[1]} columns")
    return -(np.log(rho.values) * w).sum(axis=1)


def save_rho_csv(rho: RhoMatrix, path, label_names=None) -> None:
    d = rho.values.shape[1]
    names = list(label_names) if label_names else [f"y{i + 1}" for i in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"rho_{c}" for c in names])
        for row in rho.values:
            w.writerow([repr(float(v)) for v in row])
