"""Brute-force greedy CART used as a reference in the tests.

Deliberately naive: every candidate split materialises both children and
computes their squared error directly with numpy. Shares no code with
``carrier_select.regtree``; only the contract (candidate order, tie tolerance,
stopping rules) is the same.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

TIE = 1e-10


def sse(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.sum((v - v.mean()) ** 2)) if len(v) else 0.0


@dataclass
class ONode:
    mean: float
    count: int
    feature: int | None = None
    threshold: float | None = None
    category: Any = None
    left: "ONode | None" = None
    right: "ONode | None" = None

    def goes_left(self, x) -> bool:
        v = x[self.feature]
        return v == self.category if self.threshold is None else v <= self.threshold

    def predict(self, x) -> float:
        node = self
        while node.feature is not None:
            node = node.left if node.goes_left(x) else node.right
        return node.mean


def candidates(X, categorical):
    """(feature, threshold, category, left-mask) in the contract's candidate order."""
    for fi, is_cat in enumerate(categorical):
        col = [row[fi] for row in X]
        if is_cat:
            for cat in sorted(set(col), key=lambda v: (type(v).__name__, str(v))):
                yield fi, None, cat, np.array([v == cat for v in col])
        else:
            distinct = sorted(set(col))
            for a, b in zip(distinct, distinct[1:]):
                thr = (a + b) / 2.0
                yield fi, thr, None, np.array([v <= thr for v in col])


def oracle_train(X, y, categorical, *, min_leaf=1, max_depth=None, min_decrease=0.0, depth=0):
    y = np.asarray(y, dtype=float)
    node = ONode(float(np.mean(y)), len(y))
    if max_depth is not None and depth >= max_depth:
        return node
    if np.all(y == y[0]):
        return node
    parent = sse(y)
    scored = []
    for fi, thr, cat, mask in candidates(X, categorical):
        nl = int(mask.sum())
        if nl < min_leaf or len(y) - nl < min_leaf:
            continue
        scored.append((sse(y[mask]) + sse(y[~mask]), fi, thr, cat, mask))
    if not scored:
        return node
    lowest = min(s[0] for s in scored)
    child, fi, thr, cat, mask = next(s for s in scored if s[0] <= lowest + TIE * parent)
    drop = parent - child
    if not drop > TIE * parent or not drop / len(y) > min_decrease:
        return node
    node.feature, node.threshold, node.category = fi, thr, cat
    kw = dict(min_leaf=min_leaf, max_depth=max_depth, min_decrease=min_decrease, depth=depth + 1)
    node.left = oracle_train([r for r, m in zip(X, mask) if m], y[mask], categorical, **kw)
    node.right = oracle_train([r for r, m in zip(X, mask) if not m], y[~mask], categorical, **kw)
    return node


def random_dataset(rng, max_samples=200, max_features=6):
    """Mixed numeric/categorical data with plenty of repeated values and label ties."""
    n = rng.randint(1, max_samples)
    d = rng.randint(1, max_features)
    categorical = [rng.random() < 0.4 for _ in range(d)]
    cols = []
    for is_cat in categorical:
        if is_cat:
            pool = rng.choice([["a", "b", "c", "d"], [0, 1, 2, 10], ["x", 3, "y"]])
            cols.append([rng.choice(pool) for _ in range(n)])
        elif rng.random() < 0.5:
            cols.append([rng.randint(-4, 4) for _ in range(n)])
        else:
            cols.append([round(rng.uniform(-140, -60), 1) for _ in range(n)])
    X = [tuple(c[i] for c in cols) for i in range(n)]
    if rng.random() < 0.5:
        y = [float(rng.randint(0, 5)) for _ in range(n)]
    else:
        y = [rng.gauss(100, 30) for _ in range(n)]
    return X, y, categorical


def query_points(rng, X, categorical, extra=50):
    """Training rows plus fresh points drawn from each column's range/categories."""
    pts = list(X)
    for _ in range(extra):
        row = []
        for fi, is_cat in enumerate(categorical):
            col = [r[fi] for r in X]
            if is_cat:
                row.append(rng.choice(col + ["unseen"]))
            else:
                lo, hi = min(col), max(col)
                row.append(rng.uniform(lo - 1, hi + 1))
        pts.append(tuple(row))
    return pts
