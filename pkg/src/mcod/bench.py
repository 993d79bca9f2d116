"""Perturbation benchmark: inject flipped outputs, score, and measure AUC."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from scipy.stats import rankdata

from . import rng as _rng
from .chain import DEFAULT_LAMBDA, DEFAULT_MAX_ITER, DEFAULT_TOL, fit_chain
from .data import Dataset, perturb_flip, standardize_inputs
from .strategies import Bagging, StrategySpec, detect

log = logging.getLogger(__name__)


def _check_labels(scores, labels):
    s = np.asarray(scores, dtype=float)
    lab = np.asarray(labels).astype(bool)
    if s.shape != lab.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    if lab.all() or not lab.any():
        raise ValueError("AUC needs at least one positive and one negative label")
    return s, lab


def auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(positive outranks negative), ties counting 1/2."""
    s, lab = _check_labels(scores, labels)
    n_pos = int(lab.sum())
    n_neg = lab.shape[0] - n_pos
    ranks = rankdata(s, method="average")
    u = ranks[lab].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels) -> np.ndarray:
    """(FPR, TPR) points from (0, 0) to (1, 1), thresholds in decreasing order.

    Tied scores share one threshold, so ties produce a diagonal segment.
    """
    s, lab = _check_labels(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, lab = s[order], lab[order]
    last = np.r_[np.nonzero(np.diff(s))[0], s.shape[0] - 1]
    tp = np.cumsum(lab)[last]
    fp = (last + 1) - tp
    tpr = np.r_[0.0, tp / lab.sum()]
    fpr = np.r_[0.0, fp / (~lab).sum()]
    return np.column_stack([fpr, tpr])


@dataclass
class MethodResult:
    name: str
    aucs: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def stderr(self) -> float:
        if len(self.aucs) < 2:
            return 0.0
        return float(np.std(self.aucs, ddof=1) / math.sqrt(len(self.aucs)))


@dataclass
class BenchReport:
    methods: list[MethodResult]
    metadata: dict = field(default_factory=dict)

    @property
    def repeats(self) -> int:
        return len(self.methods[0].aucs) if self.methods else 0

    @property
    def single_repeat(self) -> bool:
        return self.repeats == 1

    def by_name(self) -> dict[str, MethodResult]:
        return {r.name: r for r in self.methods}


@dataclass(frozen=True)
class BenchConfig:
    repeats: int = 10
    flip_rate: float = 0.01
    master_seed: int = 0
    lam: float = DEFAULT_LAMBDA
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    standardize_inputs: bool = True
    train_on: str = "perturbed"   # or "clean"
    threads: int = 1


def _repeat(ds: Dataset, methods, cfg: BenchConfig, r: int) -> list[float]:
    seed_r = _rng.split(cfg.master_seed, r)
    noisy, rec = perturb_flip(ds, cfg.flip_rate, _rng.split(seed_r, 0))
    labels = rec.labels(ds.n)
    model = None
    if any(m.representation == "ours" for m in methods):
        model = fit_chain(noisy if cfg.train_on == "perturbed" else ds,
                          lam=cfg.lam, tol=cfg.tol, max_iter=cfg.max_iter)
    out = []
    for spec in methods:
        if spec.bagging is not None:
            spec = replace(spec, bagging=Bagging(spec.bagging.rounds, _rng.split(seed_r, 1)))
        out.append(auc(detect(spec, noisy, model), labels))
    log.info("repeat %d: %s", r, ", ".join(f"{m.name}={a:.4f}" for m, a in zip(methods, out)))
    return out


def run_benchmark(ds: Dataset, methods: list[StrategySpec], cfg: BenchConfig = BenchConfig()) -> BenchReport:
    """Run every method on the same perturbed copy of ``ds`` per repeat.

    Repeat ``r`` uses seed ``split(master_seed, r)``; the flips are drawn
    from its child stream 0 and feature-bagging subsets from child stream 1.
    """
    if not methods:
        raise ValueError("no methods given")
    if cfg.repeats < 1:
        raise ValueError("repeats must be at least 1")
    if cfg.train_on not in ("perturbed", "clean"):
        raise ValueError("train_on must be 'perturbed' or 'clean'")
    _rng.check_seed(cfg.master_seed)
    if cfg.standardize_inputs:
        ds, _ = standardize_inputs(ds)

    def one(r):
        return _repeat(ds, methods, cfg, r)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            per_repeat = list(ex.map(one, range(cfg.repeats)))
    else:
        per_repeat = [one(r) for r in range(cfg.repeats)]

    results = [MethodResult(spec.name, [row[k] for row in per_repeat])
               for k, spec in enumerate(methods)]
    first = methods[0]
    fb = next((m.bagging for m in methods if m.bagging is not None), None)
    meta = {
        "n": ds.n, "m": ds.m, "d": ds.d,
        "repeats": cfg.repeats,
        "single_repeat": cfg.repeats == 1,
        "flip_rate": cfg.flip_rate,
        "flips_per_repeat": math.ceil(round(cfg.flip_rate * ds.n, 9)),
        "master_seed": cfg.master_seed,
        "repeat_seeds": " ".join(str(_rng.split(cfg.master_seed, r)) for r in range(cfg.repeats)),
        "lambda": cfg.lam, "fit_tol": cfg.tol, "fit_max_iter": cfg.max_iter,
        "chain": "full, natural column order",
        "train_on": cfg.train_on,
        "standardize_inputs": cfg.standardize_inputs,
        "standardize_joint": first.standardize_joint,
        "lof_k": first.lof.k,
        "ocs_nu": first.ocs.nu,
        "ocs_gamma": "1/n_features" if first.ocs.gamma is None else first.ocs.gamma,
        "ocs_solver_tol": first.ocs.solver_tol,
        "fb_rounds": fb.rounds if fb else "",
        "fb_combination": "cumulative sum",
        "methods": " ".join(m.name for m in methods),
    }
    return BenchReport(results, meta)


# -- output -------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def emit_report_csv(report: BenchReport, path) -> None:
    r = report.repeats
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mean_auc", "stderr_auc"] + [f"auc_{i + 1}" for i in range(r)])
        for m in report.methods:
            w.writerow([m.name, _fmt(m.mean), _fmt(m.stderr)] + [_fmt(a) for a in m.aucs])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        aucs = [float(v) for k, v in row.items() if k.startswith("auc_")]
        out.append({"method": row["method"], "mean_auc": float(row["mean_auc"]),
                    "stderr_auc": float(row["stderr_auc"]), "aucs": aucs})
    return out


def emit_metadata(report: BenchReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in report.metadata.items():
            fh.write(f"{k}={v}\n")


SVG_W, SVG_H = 640, 360
_MARGIN = dict(left=56, right=16, top=24, bottom=72)


def bar_geometry(report: BenchReport):
    """Pixel geometry of each bar: (x, y_top, width, height, whisker_lo, whisker_hi)."""
    plot_w = SVG_W - _MARGIN["left"] - _MARGIN["right"]
    plot_h = SVG_H - _MARGIN["top"] - _MARGIN["bottom"]
    base = _MARGIN["top"] + plot_h
    slot = plot_w / max(len(report.methods), 1)
    bars = []
    for i, m in enumerate(report.methods):
        h = plot_h * min(max(m.mean, 0.0), 1.0)
        lo = min(max(m.mean - m.stderr, 0.0), 1.0)
        hi = min(max(m.mean + m.stderr, 0.0), 1.0)
        x = _MARGIN["left"] + i * slot + 0.15 * slot
        bars.append((x, base - h, 0.7 * slot, h, base - plot_h * lo, base - plot_h * hi))
    return bars


def emit_bar_chart_svg(report: BenchReport, path) -> None:
    """Bar per method on a [0, 1] AUC axis with +-1 standard error whiskers."""
    plot_h = SVG_H - _MARGIN["top"] - _MARGIN["bottom"]
    base = _MARGIN["top"] + plot_h
    left = _MARGIN["left"]
    right = SVG_W - _MARGIN["right"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
    ]
    for t in range(6):
        v = t / 5
        y = base - plot_h * v
        parts.append(f'<line x1="{left}" y1="{y:.3f}" x2="{right}" y2="{y:.3f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.3f}" text-anchor="end">{v:.1f}</text>')
    parts.append(f'<text x="14" y="{_MARGIN["top"] + plot_h / 2:.3f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_MARGIN["top"] + plot_h / 2:.3f})">AUC</text>')
    for m, (x, y, w, h, lo, hi) in zip(report.methods, bar_geometry(report)):
        cx = x + w / 2
        parts.append(f'<rect class="bar" x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" '
                     f'fill="#4c72b0"><title>{escape(m.name)}: {m.mean:.4f} '
                     f'(se {m.stderr:.4f})</title></rect>')
        parts.append(f'<line class="err" x1="{cx:.3f}" y1="{lo:.3f}" x2="{cx:.3f}" y2="{hi:.3f}" '
                     f'stroke="red" stroke-width="2"/>')
        for yy in (lo, hi):
            parts.append(f'<line x1="{cx - w / 6:.3f}" y1="{yy:.3f}" x2="{cx + w / 6:.3f}" '
                         f'y2="{yy:.3f}" stroke="red" stroke-width="2"/>')
        parts.append(f'<text x="{cx:.3f}" y="{base + 14}" text-anchor="end" '
                     f'transform="rotate(-35 {cx:.3f} {base + 14})">{escape(m.name)}</text>')
    parts.append(f'<line x1="{left}" y1="{base}" x2="{right}" y2="{base}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{_MARGIN["top"]}" x2="{left}" y2="{base}" stroke="black"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
