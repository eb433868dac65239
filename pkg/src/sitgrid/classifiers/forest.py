"""CART trees with Gini impurity and a bagged random forest."""
from __future__ import annotations

import math

import numpy as np

# Relative slack when comparing split scores; ties go to the lowest feature
# index, then the lowest threshold.
_TIE_TOL = 1e-11


def _resolve_max_features(max_features, d):
    if max_features in (None, "all"):
        return d
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if max_features == "log2":
        return max(1, math.ceil(math.log2(d))) if d > 1 else 1
    k = int(max_features)
    if k < 1:
        raise ValueError("max_features must be >= 1")
    return min(k, d)


def gini(counts) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _best_split(Xn, onehot, features):
    """Best (feature, threshold) over ``features`` for the node's rows.

    Returns None when no feature separates any two rows. Minimizing the
    weighted child Gini is the same as maximizing
    ``sum(left_counts**2)/n_left + sum(right_counts**2)/n_right``.
    """
    m = Xn.shape[0]
    cols = Xn[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(cols, order, axis=0)
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (m-1, f, C)
    right = onehot.sum(axis=0) - left
    n_left = np.arange(1, m, dtype=float)[:, None]
    n_right = m - n_left
    score = (left * left).sum(axis=2) / n_left + (right * right).sum(axis=2) / n_right
    valid = sorted_vals[1:] > sorted_vals[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    # (f, m-1) in row-major order: lowest feature first, then lowest threshold
    flat = score.T.ravel()
    best = flat.max()
    pick = int(np.flatnonzero(flat >= best - _TIE_TOL * max(1.0, abs(best)))[0])
    fi, pos = divmod(pick, m - 1)
    lo, hi = sorted_vals[pos, fi], sorted_vals[pos + 1, fi]
    thr = (lo + hi) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[fi]), float(thr)


class DecisionTree:
    """Array-backed classification tree.

    Node ``i`` is a leaf when ``feature[i] == -1``; samples with
    ``x[feature] <= threshold`` go left.
    """

    def __init__(self, max_depth=None, min_samples_split=2, max_features=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features

    def fit(self, X, y, n_classes, rng=None, sample_idx=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n, d = X.shape
        k = _resolve_max_features(self.max_features, d)
        if rng is None:
            rng = np.random.default_rng(0)
        idx0 = np.arange(n) if sample_idx is None else np.asarray(sample_idx)
        onehot = np.eye(n_classes)[y]
        feature, threshold, left, right = [], [], [], []
        n_samples, impurity, leaf_class = [], [], []

        def new_node(idx):
            counts = np.bincount(y[idx], minlength=n_classes)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            n_samples.append(len(idx))
            impurity.append(gini(counts))
            leaf_class.append(int(np.argmax(counts)))
            return len(feature) - 1, counts

        root, root_counts = new_node(idx0)
        stack = [(root, idx0, 0, root_counts)]
        while stack:
            node, idx, depth, counts = stack.pop()
            if (
                np.count_nonzero(counts) <= 1
                or len(idx) < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                continue
            Xn = X[idx]
            varying = Xn.max(axis=0) > Xn.min(axis=0)
            if not varying.any():
                continue
            if k < d:
                # the first k non-constant features of a random permutation
                perm = rng.permutation(d)
                features = np.sort(perm[varying[perm]][:k])
            else:
                features = np.flatnonzero(varying)
            split = _best_split(Xn, onehot[idx], features)
            if split is None:
                continue
            f, thr = split
            go_left = Xn[:, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            lnode, lcounts = new_node(li)
            rnode, rcounts = new_node(ri)
            feature[node], threshold[node] = f, thr
            left[node], right[node] = lnode, rnode
            stack.append((rnode, ri, depth + 1, rcounts))
            stack.append((lnode, li, depth + 1, lcounts))

        self.n_features_ = d
        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=int)
        self.right_ = np.array(right, dtype=int)
        self.n_samples_ = np.array(n_samples, dtype=int)
        self.impurity_ = np.array(impurity, dtype=float)
        self.leaf_class_ = np.array(leaf_class, dtype=int)
        return self

    def apply(self, X):
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature_[node]
            active = f >= 0
            if not active.any():
                return node
            a = rows[active]
            na = node[active]
            go_left = X[a, f[active]] <= self.threshold_[na]
            node[a] = np.where(go_left, self.left_[na], self.right_[na])

    def predict(self, X):
        return self.leaf_class_[self.apply(X)]

    def impurity_decrease(self):
        """Per-feature total weighted impurity decrease (not normalized)."""
        out = np.zeros(self.n_features_)
        for i in np.flatnonzero(self.feature_ >= 0):
            l, r = self.left_[i], self.right_[i]
            dec = (self.n_samples_[i] * self.impurity_[i]
                   - self.n_samples_[l] * self.impurity_[l]
                   - self.n_samples_[r] * self.impurity_[r])
            out[self.feature_[i]] += dec
        return out / self.n_samples_[0]

    def to_params(self):
        return {
            "n_features": int(self.n_features_),
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "n_samples": self.n_samples_.tolist(),
            "impurity": self.impurity_.tolist(),
            "leaf_class": self.leaf_class_.tolist(),
        }

    @classmethod
    def from_params(cls, p):
        t = cls()
        t.n_features_ = int(p["n_features"])
        t.feature_ = np.array(p["feature"], dtype=int)
        t.threshold_ = np.array(p["threshold"], dtype=float)
        t.left_ = np.array(p["left"], dtype=int)
        t.right_ = np.array(p["right"], dtype=int)
        t.n_samples_ = np.array(p["n_samples"], dtype=int)
        t.impurity_ = np.array(p["impurity"], dtype=float)
        t.leaf_class_ = np.array(p["leaf_class"], dtype=int)
        return t


class RandomForest:
    """Bagged CART trees; each tree draws its own seed from the root seed."""

    def __init__(self, n_trees=100, max_depth=None, min_samples_split=2,
                 max_features="sqrt", bootstrap=True):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap

    def hyperparameters(self):
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
        }

    def fit(self, X, y, n_classes, seed=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n = X.shape[0]
        self.n_classes_ = n_classes
        self.trees_ = []
        for child in np.random.SeedSequence(seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(self.max_depth, self.min_samples_split, self.max_features)
            self.trees_.append(tree.fit(X, y, n_classes, rng, idx))
        return self

    def votes(self, X):
        """Fraction of trees voting for each class, shape (n, C)."""
        X = np.asarray(X, dtype=float)
        out = np.zeros((X.shape[0], self.n_classes_))
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            np.add.at(out, (rows, tree.predict(X)), 1.0)
        return out / len(self.trees_)

    def predict(self, X):
        return np.argmax(self.votes(X), axis=1)

    def feature_importances(self):
        total = np.zeros(self.trees_[0].n_features_)
        for tree in self.trees_:
            imp = tree.impurity_decrease()
            s = imp.sum()
            if s > 0:
                total += imp / s
        s = total.sum()
        return total / s if s > 0 else total

    def to_params(self):
        return {"n_classes": self.n_classes_, "trees": [t.to_params() for t in self.trees_]}

    @classmethod
    def from_params(cls, hyper, p):
        f = cls(**hyper)
        f.n_classes_ = int(p["n_classes"])
        f.trees_ = [DecisionTree.from_params(t) for t in p["trees"]]
        return f
