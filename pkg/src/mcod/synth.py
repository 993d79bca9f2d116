"""Synthetic datasets with a known logistic chain structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import rng as _rng
from .chain import ChainModel, ChainOrder, DimModel, design_matrix
from .data import Dataset

CLUSTER_SPREAD = 3.0


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    m: int
    d: int
    chain_coeff_scale: float = 1.0
    input_cluster_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.m, self.d, self.input_cluster_count) < 1:
            raise ValueError("n, m, d and input_cluster_count must be positive")
        if self.n <= self.d:
            raise ValueError("n must exceed d")
        if self.chain_coeff_scale < 0:
            raise ValueError("chain_coeff_scale must be non-negative")
        _rng.check_seed(self.seed)


def synth_generate(spec: SyntheticSpec) -> tuple[Dataset, ChainModel]:
    """Sample inputs from a Gaussian mixture and outputs from a logistic chain.

    Cluster centers are drawn from N(0, CLUSTER_SPREAD^2 I) and then
    shifted so their average is the origin; each point is its center plus
    standard normal noise.  Output column ``i`` is drawn from
    ``sigmoid(w_i . [x, y_1..y_{i-1}, 1])`` with every coefficient
    (bias included) uniform on ``[-scale, scale]``.
    """
    g = _rng.generator(spec.seed)
    k = spec.input_cluster_count
    centers = g.normal(0.0, CLUSTER_SPREAD, size=(k, spec.m))
    centers -= centers.mean(axis=0)
    member = g.integers(0, k, size=spec.n)
    x = centers[member] + g.standard_normal((spec.n, spec.m))

    order = ChainOrder.full(spec.d)
    s = spec.chain_coeff_scale
    y = np.zeros((spec.n, spec.d), dtype=np.int8)
    dims = []
    for i in order.order:
        pa = order.parents[i]
        w = g.uniform(-s, s, size=spec.m + len(pa) + 1)
        p1 = expit(design_matrix(x, y, pa) @ w)
        y[:, i] = g.random(spec.n) < p1
        dims.append(DimModel(w, 1.0, i))
    return Dataset(x, y), ChainModel(order, tuple(dims), spec.m)
