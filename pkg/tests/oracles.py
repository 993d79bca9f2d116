"""Slow, literal reference implementations used to check the library.

Nothing here imports the code under test.
"""

import itertools
import math


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def naive_nll(weights, x_rows, y_rows, col, parents, lam):
    """Per-row sum of -log P(observed bit) plus (lam/2)*||w without bias||^2."""
    total = 0.0
    for x, y in zip(x_rows, y_rows):
        feats = list(x) + [float(y[p]) for p in parents] + [1.0]
        p1 = sigmoid(sum(w * f for w, f in zip(weights, feats)))
        total -= math.log(p1 if y[col] == 1 else 1.0 - p1)
    return total + 0.5 * lam * sum(w * w for w in weights[:-1])


def central_diff(f, w, h=1e-5):
    out = []
    for j in range(len(w)):
        wp, wm = list(w), list(w)
        wp[j] += h
        wm[j] -= h
        out.append((f(wp) - f(wm)) / (2 * h))
    return out


def enumerate_outputs(d):
    return itertools.product((0, 1), repeat=d)


def knn_sorted(points, i, k):
    """k nearest other points of row i, ties to the lower index, by full sort."""
    cand = sorted((math.dist(points[i], points[j]), j) for j in range(len(points)) if j != i)
    return cand[:k]


def brute_lof(points, k):
    """LOF straight from k-distance, reach-dist, lrd and the density ratio."""
    pts = [list(map(float, p)) for p in points]
    n = len(pts)
    nbrs = [knn_sorted(pts, i, k) for i in range(n)]
    kdist = [nb[-1][0] for nb in nbrs]

    def reach(a, b):
        return max(kdist[b], math.dist(pts[a], pts[b]))

    lrd = []
    for a in range(n):
        mean_reach = sum(reach(a, b) for _, b in nbrs[a]) / k
        lrd.append(min(1.0 / mean_reach, 1e12) if mean_reach > 0 else 1e12)
    return [sum(lrd[b] for _, b in nbrs[a]) / k / lrd[a] for a in range(n)]


def pair_count_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    hits = 0.0
    for p in pos:
        for q in neg:
            hits += 1.0 if p > q else 0.5 if p == q else 0.0
    return hits / (len(pos) * len(neg))
