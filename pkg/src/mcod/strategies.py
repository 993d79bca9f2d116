"""Detector-over-representation combinations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .chain import ChainModel
from .data import Dataset, fit_standardization
from .detectors import LofParams, OcsParams, lof_scores, ocs_fit, ocs_scores
from .rho import transform

REPRESENTATIONS = ("joint", "out", "ours")
DETECTORS = ("lof", "ocs")
DEFAULT_FB_ROUNDS = 10


@dataclass(frozen=True)
class Bagging:
    rounds: int = DEFAULT_FB_ROUNDS
    seed: int = 0


@dataclass(frozen=True)
class StrategySpec:
    representation: str
    detector: str
    lof: LofParams = field(default_factory=LofParams)
    ocs: OcsParams = field(default_factory=OcsParams)
    bagging: Bagging | None = None
    standardize_joint: bool = True

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.bagging is not None and self.representation != "joint":
            raise ValueError("feature bagging is only defined over the joint space")

    @property
    def name(self) -> str:
        det = self.detector.upper()
        if self.bagging is not None:
            return f"FB+{det}"
        if self.representation == "ours":
            return f"OURS+{det}"
        return f"{det}-{self.representation.upper()}"


_METHOD_RE = re.compile(r"^(?:(joint|out|ours|fb)\+(lof|ocs)|(lof|ocs)-(joint|out|ours))$")


def parse_method(text: str, **kwargs) -> StrategySpec:
    """Parse names like ``ours+lof``, ``lof-joint``, ``fb+ocs`` (any case).

    A ``fb`` method gets ``Bagging()`` unless ``bagging`` is passed.
    """
    mt = _METHOD_RE.match(text.strip().lower())
    if mt is None:
        raise ValueError(f"unrecognized method {text!r}; expected e.g. ours+lof, lof-joint, fb+ocs")
    rep, det = (mt.group(1), mt.group(2)) if mt.group(1) else (mt.group(4), mt.group(3))
    bagging = kwargs.pop("bagging", None)
    if rep == "fb":
        return StrategySpec("joint", det, bagging=bagging or Bagging(), **kwargs)
    return StrategySpec(rep, det, **kwargs)


def joint_space(ds: Dataset, standardize: bool = True) -> np.ndarray:
    z = np.hstack([ds.inputs, ds.outputs.astype(float)])
    return fit_standardization(z).apply(z) if standardize else z


def run_detector(points: np.ndarray, spec: StrategySpec) -> np.ndarray:
    if spec.detector == "lof":
        return lof_scores(points, spec.lof)
    return ocs_scores(ocs_fit(points, spec.ocs), points)


def representation(spec: StrategySpec, ds: Dataset, model: ChainModel | None = None) -> np.ndarray:
    if spec.representation == "joint":
        return joint_space(ds, spec.standardize_joint)
    if spec.representation == "out":
        return ds.outputs.astype(float)
    if model is None:
        raise ValueError("the ours representation needs a fitted chain model")
    return np.array(transform(model, ds).values)


def feature_bagging(points, spec: StrategySpec, rounds: int, seed: int,
                    return_rounds: bool = False):
    """Sum detector scores over random feature subsets.

    Each round draws a subset size uniformly from ``[p // 2, p - 1]`` and
    that many distinct features.
    """
    x = np.asarray(points, dtype=float)
    p = x.shape[1]
    if p < 2:
        raise ValueError("feature bagging needs at least two features")
    if rounds < 1:
        raise ValueError("need at least one bagging round")
    g = _rng.generator(seed)
    total = np.zeros(x.shape[0])
    subsets = []
    for _ in range(rounds):
        size = int(g.integers(p // 2, p))
        feats = np.sort(g.choice(p, size=size, replace=False))
        subsets.append(feats)
        total += run_detector(x[:, feats], spec)
    return (total, subsets) if return_rounds else total


def detect(spec: StrategySpec, ds: Dataset, model: ChainModel | None = None) -> np.ndarray:
    """Outlier score per instance for one strategy."""
    points = representation(spec, ds, model)
    if spec.bagging is not None:
        return feature_bagging(points, spec, spec.bagging.rounds, spec.bagging.seed)
    return run_detector(points, spec)
