import dataclasses

import numpy as np

from stentpred.learn import ModelError
from stentpred.util.misc import derive_seed


__all__ = ["RegressionTree", "fit_tree", "BaggedTrees", "fit_bagged"]


MIN_LEAF = 5
MAX_DEPTH = 12
N_TREES = 100


@dataclasses.dataclass(frozen=True, eq=False)
class RegressionTree:
    """Binary regression tree in flat arrays

    Node 0 is the root. Internal nodes send rows with
    ``x[feature] <= threshold`` to ``left`` and the rest to ``right``;
    leaves have ``feature == -1`` and predict ``value``.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self):
        return len(self.feature)

    def apply(self, values):
        values = np.asarray(values, dtype=float)
        node = np.zeros(values.shape[0], dtype=int)
        rows = np.arange(values.shape[0])
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = values[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, values):
        return self.value[self.apply(values)]

    def to_arrays(self, prefix):
        return dict((prefix + f.name, getattr(self, f.name))
                    for f in dataclasses.fields(self))

    @classmethod
    def from_arrays(cls, arrays, prefix):
        return cls(**dict((f.name, arrays[prefix + f.name])
                          for f in dataclasses.fields(cls)))


def _best_split(x, y, min_leaf):
    """Best (feature, threshold, gain) by variance reduction, or None."""
    n = len(y)
    total = y.sum()
    parent = (y**2).sum() - total**2/n
    best = None
    for feature in range(x.shape[1]):
        order = np.argsort(x[:, feature], kind="stable")
        xs, ys = x[order, feature], y[order]
        left_n = np.arange(1, n)
        left_sum = np.cumsum(ys)[:-1]
        left_sq = np.cumsum(ys**2)[:-1]
        right_n = n - left_n
        right_sum = total - left_sum
        right_sq = (y**2).sum() - left_sq
        sse = (left_sq - left_sum**2/left_n) + (right_sq - right_sum**2/right_n)
        valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (right_n >= min_leaf)
        if not valid.any():
            continue
        candidates = np.flatnonzero(valid)
        i = candidates[np.argmin(sse[candidates])]
        gain = parent - sse[i]
        if best is None or gain > best[2]:
            best = (feature, (xs[i] + xs[i + 1])/2, gain)
    if best is None or not best[2] > 1e-12*max(abs(parent), 1.0):
        return None
    return best


def fit_tree(values, target, min_leaf=MIN_LEAF, max_depth=MAX_DEPTH):
    values = np.asarray(values, dtype=float)
    target = np.asarray(target, dtype=float)
    if len(target) < min_leaf:
        raise ModelError("tree needs at least {} rows, got {}".format(
            min_leaf, len(target)))
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(target[rows].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(target))), np.arange(len(target)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or len(rows) < 2*min_leaf:
            continue
        split = _best_split(values[rows], target[rows], min_leaf)
        if split is None:
            continue
        f, t, _ = split
        go_left = values[rows, f] <= t
        feature[node], threshold[node] = f, t
        left[node] = new_node(rows[go_left])
        right[node] = new_node(rows[~go_left])
        stack.append((right[node], rows[~go_left], depth + 1))
        stack.append((left[node], rows[go_left], depth + 1))
    return RegressionTree(np.array(feature, dtype=int), np.array(threshold),
                          np.array(left, dtype=int), np.array(right, dtype=int),
                          np.array(value))


@dataclasses.dataclass(frozen=True, eq=False)
class BaggedTrees:
    trees: tuple
    seeds: tuple

    def predict(self, values):
        return np.mean([tree.predict(values) for tree in self.trees], axis=0)


def fit_bagged(values, target, seed, n_trees=N_TREES, min_leaf=MIN_LEAF,
               max_depth=MAX_DEPTH):
    """Bootstrap-aggregated trees; tree ``i`` draws its rows from
    ``derive_seed(seed, i)``."""
    values = np.asarray(values, dtype=float)
    target = np.asarray(target, dtype=float)
    n = len(target)
    if n < min_leaf:
        raise ModelError("bagged trees need at least {} rows, got {}".format(
            min_leaf, n))
    seeds = tuple(derive_seed(seed, i) for i in range(n_trees))
    trees = []
    for s in seeds:
        rows = np.random.default_rng(s).integers(0, n, n)
        trees.append(fit_tree(values[rows], target[rows], min_leaf, max_depth))
    return BaggedTrees(tuple(trees), seeds)
