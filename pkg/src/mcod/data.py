"""Datasets of (input, binary output) pairs, CSV I/O and outlier injection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng


class DataError(ValueError):
    """Malformed or invalid dataset content."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """N instances of an m-dim real input and a d-dim binary output.

    Arrays are copied and marked read-only on construction.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    feature_names: tuple[str, ...] = ()
    label_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.outputs)
        if x.ndim != 2 or y.ndim != 2:
            raise DataError("inputs and outputs must be 2-D")
        if x.shape[0] != y.shape[0]:
            raise DataError(f"row count mismatch: {x.shape[0]} inputs vs {y.shape[0]} outputs")
        if x.shape[0] < 1 or x.shape[1] < 1 or y.shape[1] < 1:
            raise DataError(f"need N>=1, m>=1, d>=1; got shapes {x.shape}, {y.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("non-finite input value")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("non-binary output value")
        names_x = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        names_y = tuple(self.label_names) or tuple(f"y{j + 1}" for j in range(y.shape[1]))
        if len(names_x) != x.shape[1] or len(names_y) != y.shape[1]:
            raise DataError("column name count does not match data")
        object.__setattr__(self, "inputs", _frozen(x))
        object.__setattr__(self, "outputs", _frozen(y.astype(np.int8)))
        object.__setattr__(self, "feature_names", names_x)
        object.__setattr__(self, "label_names", names_y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def d(self) -> int:
        return self.outputs.shape[1]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n, self.m, self.d

    def replace(self, inputs=None, outputs=None) -> "Dataset":
        return Dataset(
            self.inputs if inputs is None else inputs,
            self.outputs if outputs is None else outputs,
            self.feature_names,
            self.label_names,
        )


def load_csv(path, d: int) -> Dataset:
    """Read a headed CSV whose trailing ``d`` columns are the binary outputs."""
    if d < 1:
        raise DataError("d must be at least 1")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    ncol = len(header)
    if ncol < d + 1:
        raise DataError(f"{path}: {ncol} columns, need at least d+1={d + 1}")
    if not rows:
        raise DataError(f"{path}: no data rows")
    m = ncol - d
    x = np.empty((len(rows), m))
    y = np.empty((len(rows), d), dtype=np.int8)
    for i, row in enumerate(rows, start=2):
        if len(row) != ncol:
            raise DataError(f"{path}:{i}: expected {ncol} cells, found {len(row)}")
        for j in range(m):
            try:
                x[i - 2, j] = float(row[j])
            except ValueError:
                raise DataError(f"{path}:{i}: non-numeric input cell {row[j]!r}") from None
        for j in range(d):
            cell = row[m + j].strip()
            try:
                v = float(cell)
            except ValueError:
                v = None
            if v not in (0.0, 1.0):
                raise DataError(f"{path}:{i}: non-binary output cell {cell!r}")
            y[i - 2, j] = int(v)
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path}: non-finite input cell")
    names = [h.strip() for h in header]
    return Dataset(x, y, tuple(names[:m]), tuple(names[m:]))


def save_csv(ds: Dataset, path) -> None:
    """Write ``ds`` so that ``load_csv(path, ds.d)`` reproduces it exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.feature_names + ds.label_names)
        for xi, yi in zip(ds.inputs, ds.outputs):
            w.writerow([repr(float(v)) for v in xi] + [str(int(v)) for v in yi])


@dataclass(frozen=True)
class Standardization:
    """Per-column affine map learned by :func:`standardize_inputs`."""

    mean: np.ndarray
    sd: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        scale = np.where(self.sd > 0, self.sd, 1.0)
        out = (x - self.mean) / scale
        out[:, self.sd <= 0] = 0.0
        return out


def fit_standardization(x: np.ndarray) -> Standardization:
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise DataError("standardization needs at least two rows")
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    # columns that are constant up to rounding are treated as exactly constant
    sd = np.where(sd > 1e-12 * np.maximum(1.0, np.abs(mean)), sd, 0.0)
    return Standardization(mean, sd)


def standardize_inputs(ds: Dataset) -> tuple[Dataset, Standardization]:
    """Center every input column and scale it to unit sample deviation.

    Constant columns become all-zero. Outputs are left untouched.
    """
    rec = fit_standardization(ds.inputs)
    return ds.replace(inputs=rec.apply(ds.inputs)), rec


@dataclass(frozen=True)
class PerturbationRecord:
    flipped_rows: tuple[int, ...]
    flipped_dims: tuple[int, ...]
    seed: int

    def labels(self, n: int) -> np.ndarray:
        """Binary outlier indicator over all ``n`` rows."""
        lab = np.zeros(n, dtype=np.int8)
        lab[list(self.flipped_rows)] = 1
        return lab


def flip_count(n: int, rate: float) -> int:
    # round first so that e.g. 0.07 * 100 = 7.000000000000001 still gives 7
    return math.ceil(round(rate * n, 9))


def perturb_flip(ds: Dataset, rate: float, seed: int) -> tuple[Dataset, PerturbationRecord]:
    """Flip one uniformly chosen output bit in ``ceil(rate * N)`` distinct rows."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"flip rate must lie in (0, 1], got {rate}")
    seed = _rng.check_seed(seed)
    k = flip_count(ds.n, rate)
    g = _rng.generator(seed)
    rows = np.sort(g.choice(ds.n, size=k, replace=False))
    dims = g.integers(0, ds.d, size=k)
    y = np.array(ds.outputs)
    y[rows, dims] = 1 - y[rows, dims]
    rec = PerturbationRecord(tuple(int(r) for r in rows), tuple(int(j) for j in dims), seed)
    return ds.replace(outputs=y), rec
