"""Multi-output CART regression trees and the bagging / random forest / extra trees ensembles.

Splits maximise the reduction of the summed per-output squared error;
leaves predict the mean target vector. A sample goes left when
``x[feature] < threshold``.
"""
import math

import numpy as np
from numba import njit

from ..errors import InsufficientDataError
from .base import MultiOutputModel
from .linear import _check_xy


@njit(cache=True)
def _build_tree(X, Y, sample_idx, max_depth, min_samples_leaf, max_features, random_split, seed):
    np.random.seed(seed)
    n_total = sample_idx.shape[0]
    q = X.shape[1]
    H = Y.shape[1]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, H))

    idx = sample_idx.copy()
    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_total
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    features = np.arange(q)
    total = np.empty(H)
    run = np.empty(H)
    xs = np.empty(n_total)

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        n = end - start

        total[:] = 0.0
        sq = 0.0
        for i in range(start, end):
            row = idx[i]
            for h in range(H):
                v = Y[row, h]
                total[h] += v
                sq += v * v
        parent = 0.0
        for h in range(H):
            value[node, h] = total[h] / n
            parent += total[h] * total[h]
        parent /= n
        sse = sq - parent

        if max_depth >= 0 and depth >= max_depth:
            continue
        if n < 2 * min_samples_leaf or n < 2:
            continue
        if sse <= 1e-10 * (sq + 1e-300):
            continue

        # partial Fisher-Yates draw of the candidate features
        for k in range(max_features):
            j = k + np.random.randint(q - k)
            tmp = features[k]
            features[k] = features[j]
            features[j] = tmp

        best_score = parent
        best_feature = -1
        best_threshold = 0.0
        for k in range(max_features):
            f = features[k]
            for i in range(n):
                xs[i] = X[idx[start + i], f]
            if random_split:
                lo = np.inf
                hi = -np.inf
                for i in range(n):
                    if xs[i] < lo:
                        lo = xs[i]
                    if xs[i] > hi:
                        hi = xs[i]
                if hi <= lo:
                    continue
                thr = lo + np.random.random() * (hi - lo)
                run[:] = 0.0
                nl = 0
                for i in range(n):
                    if xs[i] < thr:
                        nl += 1
                        row = idx[start + i]
                        for h in range(H):
                            run[h] += Y[row, h]
                nr = n - nl
                if nl < min_samples_leaf or nr < min_samples_leaf or nl == 0 or nr == 0:
                    continue
                sl = 0.0
                sr = 0.0
                for h in range(H):
                    sl += run[h] * run[h]
                    d = total[h] - run[h]
                    sr += d * d
                score = sl / nl + sr / nr
                if score > best_score:
                    best_score = score
                    best_feature = f
                    best_threshold = thr
            else:
                order = np.argsort(xs[:n], kind="mergesort")
                run[:] = 0.0
                for i in range(n - 1):
                    row = idx[start + order[i]]
                    for h in range(H):
                        run[h] += Y[row, h]
                    nl = i + 1
                    nr = n - nl
                    if nl < min_samples_leaf or nr < min_samples_leaf:
                        continue
                    x_lo = xs[order[i]]
                    x_hi = xs[order[i + 1]]
                    if not x_lo < x_hi:
                        continue
                    sl = 0.0
                    sr = 0.0
                    for h in range(H):
                        sl += run[h] * run[h]
                        d = total[h] - run[h]
                        sr += d * d
                    score = sl / nl + sr / nr
                    if score > best_score:
                        best_score = score
                        best_feature = f
                        thr = 0.5 * (x_lo + x_hi)
                        if not x_lo < thr:
                            thr = x_hi
                        best_threshold = thr

        if best_feature < 0 or best_score - parent <= 1e-12 * sse:
            continue

        # in-place partition of idx[start:end]
        i = start
        j = end - 1
        while i <= j:
            if X[idx[i], best_feature] < best_threshold:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i

        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[sp] = n_nodes + 1
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = n_nodes
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        sp += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


class RegressionTree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_nodes(self):
        return self.feature.size

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X):
        return self.value[_apply(self.feature, self.threshold, self.left, self.right, X)]


def grow_tree(X, Y, sample_idx=None, max_depth=None, min_samples_leaf=5, max_features=None,
              random_split=False, seed=0):
    """Grow a single tree on rows ``sample_idx`` (duplicates allowed) of ``X``, ``Y``."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if sample_idx is None:
        sample_idx = np.arange(X.shape[0])
    q = X.shape[1]
    max_features = q if max_features is None else int(min(max(max_features, 1), q))
    parts = _build_tree(X, Y, np.asarray(sample_idx, dtype=np.int64),
                        -1 if max_depth is None else int(max_depth), int(min_samples_leaf),
                        max_features, bool(random_split), int(seed) & 0xFFFFFFFF)
    return RegressionTree(*parts)


class TreeEnsemble(MultiOutputModel):
    def __init__(self, trees, input_dim, output_dim, spec=None):
        super().__init__(spec, input_dim, output_dim)
        self.trees = trees

    def _predict(self, X):
        X = np.ascontiguousarray(X)
        out = np.zeros((X.shape[0], self.output_dim))
        for tree in self.trees:
            out += tree.predict(X)
        return out / len(self.trees)


# per-family settings: (bootstrap, random feature subset, random thresholds)
FAMILY_SETTINGS = {
    "tree": (False, False, False),
    "bagging": (True, False, False),
    "random_forest": (True, True, False),
    "extra_trees": (False, True, True),
}


def fit_trees(X, Y, family, n_trees=1, max_depth=None, min_samples_leaf=5, seed=0, spec=None):
    X, Y = _check_xy(X, Y)
    if family not in FAMILY_SETTINGS:
        raise ValueError(f"not a tree family: {family!r}")
    m, q = X.shape
    if m < 2:
        raise InsufficientDataError("tree models need at least 2 rows")
    bootstrap, subset, random_split = FAMILY_SETTINGS[family]
    if family == "tree":
        n_trees = 1
    max_features = math.ceil(math.sqrt(q)) if subset else q
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(int(n_trees)):
        sample_idx = rng.integers(0, m, size=m) if bootstrap else np.arange(m)
        tree_seed = int(rng.integers(0, 2 ** 31 - 1))
        trees.append(grow_tree(X, Y, sample_idx, max_depth, min_samples_leaf, max_features,
                               random_split, tree_seed))
    return TreeEnsemble(trees, q, Y.shape[1], spec)
