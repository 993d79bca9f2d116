"""Chain-rule decomposed model of P(Y | X).

Each output dimension ``i`` gets an L2-regularized logistic model on the
features ``[x, y_parents(i), 1]``.  With the default full chain every
dimension conditions on all outputs before it in the order, which makes
the product of the factors an exact factorization of the conditional
joint.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset, Standardization

log = logging.getLogger(__name__)

PROB_EPS = 1e-12
FORMAT_VERSION = 1

DEFAULT_LAMBDA = 1.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500


class ChainFitError(RuntimeError):
    pass


def clamp_prob(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


@dataclass(frozen=True)
class ChainOrder:
    """Evaluation order over output columns and the parent set of each column.

    Columns are 0-based. ``parents[i]`` lists the parents of column ``i`` in
    the order their values are appended to the feature vector.
    """

    order: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        d = len(self.order)
        if sorted(self.order) != list(range(d)):
            raise ValueError(f"order must be a permutation of 0..{d - 1}")
        if len(self.parents) != d:
            raise ValueError("need one parent set per output column")
        pos = {c: k for k, c in enumerate(self.order)}
        for i, pa in enumerate(self.parents):
            if len(set(pa)) != len(pa) or any(p not in pos or pos[p] >= pos[i] for p in pa):
                raise ValueError(f"parents of column {i} must precede it in the order")

    @classmethod
    def full(cls, d: int, order=None) -> "ChainOrder":
        """Full chain: each column's parents are all columns before it."""
        order = tuple(range(d)) if order is None else tuple(int(c) for c in order)
        parents = [()] * d
        for k, c in enumerate(order):
            parents[c] = order[:k]
        return cls(order, tuple(parents))

    @property
    def d(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class DimModel:
    """Logistic factor for one output column.

    Weight layout: ``m`` input weights, one weight per parent (in parent
    order), then the bias.
    """

    weights: np.ndarray
    lam: float
    dim_index: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite vector")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class FitDiagnostics:
    objective: float
    grad_norm: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ChainModel:
    order: ChainOrder
    dims: tuple[DimModel, ...]
    m: int
    diagnostics: tuple[FitDiagnostics, ...] | None = None
    # input scaling that must be applied to raw data before evaluation
    scaling: Standardization | None = None

    def __post_init__(self):
        if len(self.dims) != self.order.d:
            raise ValueError("need one DimModel per output column")
        for i, dm in enumerate(self.dims):
            if dm.dim_index != i:
                raise ValueError("dims must be indexed by output column")
            want = self.m + len(self.order.parents[i]) + 1
            if dm.weights.shape[0] != want:
                raise ValueError(f"column {i}: expected {want} weights, got {dm.weights.shape[0]}")

    @property
    def d(self) -> int:
        return self.order.d

    def model_id(self) -> str:
        return hashlib.sha256(dumps_model(self).encode()).hexdigest()[:16]

    def prepare_inputs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x if self.scaling is None else self.scaling.apply(x)


def design_matrix(x: np.ndarray, y: np.ndarray, parents) -> np.ndarray:
    """Rows ``[x, y[parents], 1]`` used by one factor."""
    n = x.shape[0]
    return np.hstack([x, np.asarray(y, dtype=float)[:, list(parents)], np.ones((n, 1))])


def predict_dim_prob(model: DimModel, x, y_parents) -> float:
    """P(Y_i = 1 | x, parent bits) for a single instance."""
    z = np.concatenate([np.asarray(x, dtype=float).ravel(),
                        np.asarray(y_parents, dtype=float).ravel(), [1.0]])
    if z.shape[0] != model.weights.shape[0]:
        raise ValueError(f"feature length {z.shape[0]} does not match {model.weights.shape[0]} weights")
    return float(expit(z @ model.weights))


def _penalty_mask(p: int) -> np.ndarray:
    mask = np.ones(p)
    mask[-1] = 0.0
    return mask


def _objective(w, z, t, lam):
    s = z @ w
    # -log P(t | z) = log(1 + e^s) - t*s
    data = np.sum(np.logaddexp(0.0, s) - t * s)
    return data + 0.5 * lam * np.dot(w[:-1], w[:-1])


def _gradient(w, z, t, lam):
    return z.T @ (expit(z @ w) - t) + lam * w * _penalty_mask(w.shape[0])


def _problem(model: DimModel, ds: Dataset, order: ChainOrder):
    i = model.dim_index
    if not 0 <= i < order.d:
        raise ValueError(f"dimension index {i} out of range for d={order.d}")
    z = design_matrix(ds.inputs, ds.outputs, order.parents[i])
    if z.shape[1] != model.weights.shape[0]:
        raise ValueError("weight length does not match dataset and parent set")
    return z, ds.outputs[:, i].astype(float)


def nll_objective(model: DimModel, ds: Dataset, order: ChainOrder) -> float:
    """Negative log-likelihood of column ``model.dim_index`` plus (lam/2)||w||^2.

    The bias is not penalized.
    """
    z, t = _problem(model, ds, order)
    return float(_objective(model.weights, z, t, model.lam))


def nll_gradient(model: DimModel, ds: Dataset, order: ChainOrder) -> np.ndarray:
    z, t = _problem(model, ds, order)
    return _gradient(model.weights, z, t, model.lam)


def _newton(z, t, lam, w0, tol, max_iter):
    """Damped Newton with Armijo backtracking on a strictly convex objective."""
    p = z.shape[1]
    reg = lam * _penalty_mask(p)
    w = np.array(w0, dtype=float)
    f = _objective(w, z, t, lam)
    it = 0
    while True:
        q = expit(z @ w)
        g = z.T @ (q - t) + reg * w
        gnorm = float(np.linalg.norm(g))
        if not (np.isfinite(f) and np.isfinite(gnorm)):
            raise ChainFitError("non-finite objective or gradient during fit")
        if gnorm <= tol or it >= max_iter:
            return w, f, gnorm, it, gnorm <= tol
        h = (z * (q * (1.0 - q))[:, None]).T @ z
        h[np.diag_indices(p)] += reg
        try:
            step = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, g, rcond=None)[0]
        slope = float(g @ step)
        if not slope > 0:
            step, slope = g, gnorm**2
        a = 1.0
        while True:
            w_new = w - a * step
            f_new = _objective(w_new, z, t, lam)
            if f_new <= f - 1e-4 * a * slope or a < 1e-12:
                break
            a *= 0.5
        w, f = w_new, f_new
        it += 1


def fit_dim(ds: Dataset, order: ChainOrder, i: int, lam=DEFAULT_LAMBDA, tol=DEFAULT_TOL,
            max_iter=DEFAULT_MAX_ITER, init=None) -> tuple[DimModel, FitDiagnostics]:
    z = design_matrix(ds.inputs, ds.outputs, order.parents[i])
    t = ds.outputs[:, i].astype(float)
    w0 = np.zeros(z.shape[1]) if init is None else init
    w, f, gnorm, it, ok = _newton(z, t, lam, w0, tol, max_iter)
    if not ok:
        log.warning("column %d: gradient norm %.3g above tol after %d iterations", i, gnorm, it)
    return DimModel(w, lam, i), FitDiagnostics(float(f), gnorm, it, ok)


def fit_chain(ds: Dataset, order: ChainOrder | None = None, lam: float = DEFAULT_LAMBDA,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              init: list | None = None, threads: int = 1) -> ChainModel:
    """Fit every factor on the observed data, starting from zero weights.

    Parent values are taken from the observed outputs, so the ``d``
    problems are independent and may run on ``threads`` workers.
    ``init`` optionally gives a warm start per column.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    order = ChainOrder.full(ds.d) if order is None else order
    if order.d != ds.d:
        raise ValueError(f"order covers {order.d} outputs, dataset has {ds.d}")

    def one(i):
        return fit_dim(ds, order, i, lam, tol, max_iter, None if init is None else init[i])

    if threads > 1 and ds.d > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(ds.d)))
    else:
        results = [one(i) for i in range(ds.d)]
    return ChainModel(order, tuple(r[0] for r in results), ds.m, tuple(r[1] for r in results))


def joint_prob(model: ChainModel, x, y) -> float:
    """P(y | x) as the product of the chain factors, evaluated in order."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y).ravel()
    if x.shape[0] != model.m or y.shape[0] != model.d:
        raise ValueError("instance shape does not match model")
    prob = 1.0
    for i in model.order.order:
        p1 = predict_dim_prob(model.dims[i], x, y[list(model.order.parents[i])])
        prob *= p1 if y[i] == 1 else 1.0 - p1
    return prob


# -- text serialization -------------------------------------------------------

def _hex_row(values) -> str:
    return " ".join(float(v).hex() for v in values)


def _floats(tokens) -> np.ndarray:
    return np.array([float.fromhex(t) for t in tokens], dtype=float)


def dumps_model(model: ChainModel) -> str:
    lines = [
        f"mcod-chain-model {FORMAT_VERSION}",
        f"m {model.m}",
        f"d {model.d}",
        "order " + " ".join(map(str, model.order.order)),
    ]
    if model.scaling is not None:
        lines.append("scale_mean " + _hex_row(model.scaling.mean))
        lines.append("scale_sd " + _hex_row(model.scaling.sd))
    for dm in model.dims:
        pa = model.order.parents[dm.dim_index]
        lines.append(f"dim {dm.dim_index}")
        lines.append("parents " + " ".join(map(str, pa)) if pa else "parents")
        lines.append("lambda " + float(dm.lam).hex())
        lines.append("weights " + _hex_row(dm.weights))
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> ChainModel:
    """Parse :func:`dumps_model` output; weights round-trip bit for bit."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        if rows[0] != ["mcod-chain-model", str(FORMAT_VERSION)]:
            raise ValueError(f"unsupported model header {' '.join(rows[0])!r}")
        kv = {}
        dims = []
        for r in rows[1:]:
            key, vals = r[0], r[1:]
            if key == "dim":
                dims.append({"index": int(vals[0])})
            elif dims and key in ("parents", "lambda", "weights"):
                dims[-1][key] = vals
            else:
                kv[key] = vals
        m, d = int(kv["m"][0]), int(kv["d"][0])
        order_seq = tuple(int(c) for c in kv["order"])
        dims.sort(key=lambda e: e["index"])
        parents = tuple(tuple(int(p) for p in e["parents"]) for e in dims)
        order = ChainOrder(order_seq, parents)
        dms = tuple(DimModel(_floats(e["weights"]), float.fromhex(e["lambda"][0]), e["index"])
                    for e in dims)
        scaling = None
        if "scale_mean" in kv:
            scaling = Standardization(_floats(kv["scale_mean"]), _floats(kv["scale_sd"]))
        if len(dms) != d:
            raise ValueError(f"header says d={d} but {len(dms)} dims present")
        return ChainModel(order, dms, m, None, scaling)
    except (KeyError, IndexError) as e:
        raise ValueError(f"malformed model document: missing {e}") from None


def save_model(model: ChainModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> ChainModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
