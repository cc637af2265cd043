"""Greedy CART regression tree with buffered online updates and profile-branch caching.

Split search minimises the summed squared error of the two children. Numeric
candidates are midpoints between consecutive distinct values (``x <= thr`` goes
left); categorical candidates isolate one category (``x == cat`` goes left).
Among candidates whose child SSE is within ``REL_TIE * parent SSE`` of the best,
the first in candidate order wins: feature order, then ascending threshold or
category (categories sort by type name, then string form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Mapping, Sequence

REL_TIE = 1e-10


class EmptySamplesError(ValueError):
    pass


class EmptyTreeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    categorical: bool = False


@dataclass(frozen=True)
class TreeParams:
    min_samples_leaf: int = 1
    max_depth: int | None = None
    min_impurity_decrease: float = 0.0  # per-sample SSE drop a split must beat

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float | None = None
    category: Any = None

    def goes_left(self, x: Sequence[Any]) -> bool:
        v = x[self.feature]
        return v == self.category if self.threshold is None else v <= self.threshold


@dataclass(eq=False)
class Node:
    count: int
    total: float
    split: Split | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def value(self) -> float:
        return self.total / self.count

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def leaves(self) -> list["Node"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(self.left.depth(), self.right.depth())


def _sse(y: Sequence[float]) -> float:
    m = math.fsum(y) / len(y)
    return math.fsum((v - m) ** 2 for v in y)


def _cat_key(v: Any) -> tuple[str, str]:
    return (type(v).__name__, str(v))


def best_split(X: Sequence[Sequence[Any]], y: Sequence[float], features: Sequence[Feature],
               params: TreeParams = TreeParams()) -> tuple[Split, float] | None:
    """Best admissible split of (X, y) and its child SSE, or None."""
    n = len(y)
    leaf = params.min_samples_leaf
    if n < 2 * leaf:
        return None
    mean = math.fsum(y) / n
    c = [v - mean for v in y]  # centred labels keep the prefix sums well conditioned
    parent = math.fsum(v * v for v in c)
    tol = REL_TIE * parent
    cands: list[tuple[float, Split]] = []
    consider = lambda child, split: cands.append((child, split))  # noqa: E731

    for fi, feat in enumerate(features):
        col = [row[fi] for row in X]
        if feat.categorical:
            for cat in sorted(set(col), key=_cat_key):
                li = [c[i] for i in range(n) if col[i] == cat]
                ri = [c[i] for i in range(n) if col[i] != cat]
                if len(li) < leaf or len(ri) < leaf:
                    continue
                consider(_sse_centred(li) + _sse_centred(ri), Split(fi, None, cat))
            continue
        order = sorted(range(n), key=lambda i: col[i])
        s1 = s2 = 0.0
        tot1 = math.fsum(c)
        tot2 = parent
        for k in range(1, n):
            i = order[k - 1]
            s1 += c[i]
            s2 += c[i] * c[i]
            a, b = col[order[k - 1]], col[order[k]]
            if a == b or k < leaf or n - k < leaf:
                continue
            nl, nr = k, n - k
            sl = s2 - s1 * s1 / nl
            sr = (tot2 - s2) - (tot1 - s1) ** 2 / nr
            consider(max(sl, 0.0) + max(sr, 0.0), Split(fi, (a + b) / 2.0))
    if not cands:
        return None
    lowest = min(ch for ch, _ in cands)
    child, split = next(cand for cand in cands if cand[0] <= lowest + tol)
    drop = parent - child
    if not drop > tol or not drop / n > params.min_impurity_decrease:
        return None
    return split, child


def _sse_centred(v: Sequence[float]) -> float:
    s = math.fsum(v)
    return max(math.fsum(x * x for x in v) - s * s / len(v), 0.0)


def _build(X, y, idx: list[int], features, params, depth: int) -> Node:
    ys = [y[i] for i in idx]
    node = Node(len(idx), math.fsum(ys))
    if params.max_depth is not None and depth >= params.max_depth:
        return node
    if max(ys) == min(ys):
        return node
    found = best_split([X[i] for i in idx], ys, features, params)
    if found is None:
        return node
    split, _ = found
    li = [i for i in idx if split.goes_left(X[i])]
    ri = [i for i in idx if not split.goes_left(X[i])]
    node.split = split
    node.left = _build(X, y, li, features, params, depth + 1)
    node.right = _build(X, y, ri, features, params, depth + 1)
    return node


def tree_train(X: Sequence[Sequence[Any]], y: Sequence[float], features: Sequence[Feature],
               params: TreeParams = TreeParams()) -> Node:
    if not len(y):
        raise EmptySamplesError("EMPTY_SAMPLES")
    if len(X) != len(y):
        raise ValueError("X and y differ in length")
    return _build(X, y, list(range(len(y))), list(features), params, 0)


class RegressionTree:
    """Online wrapper: immediate leaf updates, full rebuild every ``rebuild_every`` inserts.

    ``profile_features`` names the features whose values come from a profile
    assignment; :meth:`predict` with ``profile_key`` resolves those tests once per
    assignment and caches the residual tree.
    """

    def __init__(self, features: Sequence[Feature], params: TreeParams = TreeParams(),
                 rebuild_every: int = 32, profile_features: Sequence[str] = ()):
        if rebuild_every < 1:
            raise ValueError("rebuild_every must be >= 1")
        self.features = tuple(features)
        self.params = params
        self.rebuild_every = rebuild_every
        names = [f.name for f in self.features]
        self.profile_idx = frozenset(names.index(n) for n in profile_features)
        self.X: list[tuple] = []
        self.y: list[float] = []
        self.root: Node | None = None
        self.since_rebuild = 0
        self.rebuilds = 0
        self.tests = 0  # node tests evaluated, including cache construction
        self._cache: dict[Hashable, Node] = {}

    def __len__(self) -> int:
        return len(self.y)

    def fit(self, X: Sequence[Sequence[Any]], y: Sequence[float]) -> "RegressionTree":
        self.X = [tuple(r) for r in X]
        self.y = [float(v) for v in y]
        self.rebuild()
        return self

    def rebuild(self) -> None:
        self.root = tree_train(self.X, self.y, self.features, self.params) if self.y else None
        self.since_rebuild = 0
        self.rebuilds += 1
        self._cache.clear()

    def update(self, x: Sequence[Any], label: float) -> None:
        x, label = tuple(x), float(label)
        if not math.isfinite(label):
            raise ValueError("label must be finite")
        self.X.append(x)
        self.y.append(label)
        self.since_rebuild += 1
        if self.root is None:
            self.root = Node(1, label)
        else:
            leaf = self._leaf(self.root, x, count=False)
            leaf.count += 1
            leaf.total += label
        if self.since_rebuild >= self.rebuild_every:
            self.rebuild()

    def _leaf(self, node: Node, x: Sequence[Any], count: bool = True) -> Node:
        while not node.is_leaf:
            if count:
                self.tests += 1
            node = node.left if node.split.goes_left(x) else node.right
        return node

    def predict(self, x: Sequence[Any], profile_key: Hashable | None = None) -> float:
        if self.root is None:
            raise EmptyTreeError("EMPTY_TREE")
        if profile_key is None:
            return self._leaf(self.root, x).value
        entry = self._cache.get(profile_key)
        if entry is None:
            entry = self._specialise(self.root, x, {})
            self._cache[profile_key] = entry
        return self._leaf(entry, x).value

    def _specialise(self, node: Node, x: Sequence[Any], memo: dict[int, Node]) -> Node:
        """Residual tree for a fixed profile assignment; leaves are shared with the main tree."""
        if node.is_leaf:
            return node
        key = id(node)
        if key in memo:
            return memo[key]
        if node.split.feature in self.profile_idx:
            self.tests += 1
            out = self._specialise(node.left if node.split.goes_left(x) else node.right, x, memo)
        else:
            lo = self._specialise(node.left, x, memo)
            hi = self._specialise(node.right, x, memo)
            if lo is node.left and hi is node.right:
                out = node
            else:
                out = Node(node.count, node.total, node.split, lo, hi)
        memo[key] = out
        return out

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def leaf_means_consistent(self) -> bool:
        """Every leaf's value equals the mean of the buffered labels that reach it."""
        if self.root is None:
            return True
        seen: dict[int, list[float]] = {}
        for x, v in zip(self.X, self.y):
            seen.setdefault(id(self._leaf(self.root, x, count=False)), []).append(v)
        return all(
            math.isclose(leaf.value, math.fsum(seen.get(id(leaf), [])) / max(len(seen.get(id(leaf), [])), 1),
                         rel_tol=1e-12, abs_tol=1e-9)
            for leaf in self.root.leaves() if id(leaf) in seen
        )


def tree_from_mapping(rows: Sequence[Mapping[str, Any]], label: str,
                      features: Sequence[Feature], params: TreeParams = TreeParams()) -> Node:
    X = [tuple(r[f.name] for f in features) for r in rows]
    return tree_train(X, [r[label] for r in rows], features, params)
