"""Base outlier detectors over real-valued point sets.

Every scorer returns one finite value per point, larger meaning more
anomalous.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

log = logging.getLogger(__name__)

DENSITY_CAP = 1e12


class SolverError(RuntimeError):
    pass


def _points(points) -> np.ndarray:
    a = np.asarray(points, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ValueError("points must be a finite 2-D array")
    return a


# -- nearest neighbours -------------------------------------------------------

class NeighborIndex:
    """Exact Euclidean k-NN by brute force.

    Ties in distance go to the lower row index.
    """

    def __init__(self, points):
        self.points = _points(points)
        if self.points.shape[0] < 2:
            raise ValueError("index needs at least two points")

    def __len__(self):
        return self.points.shape[0]

    def query(self, q, k: int, exclude: int | None = None):
        """Return ``(rows, distances)`` of the ``k`` nearest rows to ``q``.

        ``exclude`` drops one member row (the query itself).
        """
        limit = len(self) - (exclude is not None)
        if not 1 <= k <= limit:
            raise ValueError(f"k={k} out of range [1, {limit}]")
        dist = cdist(np.asarray(q, dtype=float).reshape(1, -1), self.points)[0]
        if exclude is not None:
            dist[exclude] = np.inf
        rows = np.argsort(dist, kind="stable")[:k]
        return rows, dist[rows]

    def all_knn(self, k: int):
        """k nearest other members for every member row."""
        n = len(self)
        if not 1 <= k <= n - 1:
            raise ValueError(f"k={k} out of range [1, {n - 1}]")
        dist = cdist(self.points, self.points)
        np.fill_diagonal(dist, np.inf)
        rows = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return rows, np.take_along_axis(dist, rows, axis=1)


def knn_query(index: NeighborIndex, q, k: int, exclude: int | None = None):
    return index.query(q, k, exclude)


# -- local outlier factor -----------------------------------------------------

@dataclass(frozen=True)
class LofParams:
    k: int = 10


def lof_scores(points, params: LofParams = LofParams()) -> np.ndarray:
    """Local outlier factor of every point w.r.t. its k nearest neighbours.

    Local reachability densities are capped at DENSITY_CAP, so a point
    whose neighbourhood is made of exact duplicates gets ratio 1 when its
    neighbours are duplicates too.
    """
    x = _points(points)
    k = params.k
    if x.shape[0] <= k:
        raise ValueError(f"LOF needs more than k={k} points, got {x.shape[0]}")
    if k < 1:
        raise ValueError("k must be positive")
    nbr, dist = NeighborIndex(x).all_knn(k)
    kdist = dist[:, -1]
    reach = np.maximum(dist, kdist[nbr])
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide="ignore"):
        lrd = np.minimum(1.0 / mean_reach, DENSITY_CAP)
    return lrd[nbr].mean(axis=1) / lrd


# -- one-class SVM ------------------------------------------------------------

@dataclass(frozen=True)
class OcsParams:
    nu: float = 0.1
    gamma: float | None = None  # None -> 1 / n_features
    solver_tol: float = 1e-6
    max_iter: int = 1_000_000

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


@dataclass(frozen=True)
class OcsModel:
    support: np.ndarray   # rows with nonzero alpha
    alpha: np.ndarray     # their dual coefficients, summing to 1
    offset: float
    gamma: float
    nu: float
    iterations: int
    kkt_gap: float
    full_alpha: np.ndarray

    def decision(self, points) -> np.ndarray:
        z = _points(points)
        if z.shape[1] != self.support.shape[1]:
            raise ValueError(f"points have {z.shape[1]} features, model has {self.support.shape[1]}")
        return rbf_kernel(z, self.support, self.gamma) @ self.alpha - self.offset


def _select_pair(grad, alpha, c, qd, kernel):
    """Second-order working-set selection (Fan, Chen and Lin, 2005)."""
    up = alpha < c
    low = alpha > 0
    neg_g = -grad
    i = int(np.argmax(np.where(up, neg_g, -np.inf)))
    gmax = neg_g[i]
    gmin = np.min(np.where(low, neg_g, np.inf))
    gap = gmax - gmin
    cand = low & (neg_g < gmax)
    if not cand.any():
        return i, -1, gap
    b = gmax + grad
    a = qd[i] + qd - 2.0 * kernel[i]
    a = np.where(a > 0, a, 1e-12)
    obj = np.where(cand, -(b * b) / a, np.inf)
    return i, int(np.argmin(obj)), gap


def ocs_fit(points, params: OcsParams = OcsParams()) -> OcsModel:
    """Solve the nu one-class SVM dual with an RBF kernel by SMO.

    min 1/2 a'Ka  subject to  0 <= a_i <= 1/(nu N),  sum a = 1.
    The decision value is ``sum_i a_i K(x_i, z) - offset``.
    """
    x = _points(points)
    n, p = x.shape
    if n < 2:
        raise ValueError("one-class SVM needs at least two points")
    gamma = params.gamma if params.gamma is not None else 1.0 / p
    c = 1.0 / (params.nu * n)
    kernel = rbf_kernel(x, x, gamma)
    qd = np.diag(kernel).copy()

    alpha = np.zeros(n)
    n_full = int(params.nu * n)
    alpha[:n_full] = c
    if n_full < n:
        alpha[n_full] = 1.0 - n_full * c
    grad = kernel @ alpha

    it = 0
    while True:
        i, j, gap = _select_pair(grad, alpha, c, qd, kernel)
        if gap < params.solver_tol or j < 0:
            break
        if it >= params.max_iter:
            raise SolverError(f"SMO stopped at KKT gap {gap:.3g} after {it} iterations")
        quad = qd[i] + qd[j] - 2.0 * kernel[i, j]
        if quad <= 0:
            quad = 1e-12
        delta = (grad[i] - grad[j]) / quad
        old_i, old_j = alpha[i], alpha[j]
        total = old_i + old_j
        ai, aj = old_i - delta, old_j + delta
        if total > c:
            if ai > c:
                ai, aj = c, total - c
        elif aj < 0:
            aj, ai = 0.0, total
        if total > c:
            if aj > c:
                aj, ai = c, total - c
        elif ai < 0:
            ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += kernel[i] * (ai - old_i) + kernel[j] * (aj - old_j)
        it += 1

    free = (alpha > 0) & (alpha < c)
    if free.any():
        offset = float(grad[free].mean())
    else:
        ub = np.min(grad[alpha <= 0], initial=np.inf)
        lb = np.max(grad[alpha >= c], initial=-np.inf)
        offset = float((ub + lb) / 2)
    sv = alpha > 0
    log.debug("SMO converged: %d iterations, gap %.3g, %d SVs", it, gap, int(sv.sum()))
    return OcsModel(x[sv].copy(), alpha[sv].copy(), offset, gamma, params.nu, it,
                    float(gap), alpha)


def ocs_scores(model: OcsModel, points) -> np.ndarray:
    """Negated decision value: larger means further outside the support."""
    return -model.decision(points)
