"""Cost-sensitive CART classifier used to split ranking-tree cells.

Positives are weighted ``2 * (1 - omega)`` and negatives ``2 * omega``.
With ``omega`` set to the positive rate of the cell, both classes carry the
same total weight and the empirical weighted risk of a region ``C_l``
predicted positive is::

    (2/m) * ((1 - omega) * #{y = +1 outside C_l} + omega * #{y = -1 inside C_l})
"""
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEnsemble, IndexMismatch, InvalidFeatures
from .metrics import as_labels

__all__ = ["CostSensitiveTree", "weighted_risk", "train", "predict", "leaf_label"]

_TIE_RTOL = 1e-12


def weighted_risk(predicted_positive, labels, omega):
    """Empirical weighted misclassification risk of a predicted-positive set."""
    left = np.asarray(predicted_positive, dtype=bool).ravel()
    y = as_labels(labels).ravel()
    m = y.size
    if m == 0:
        raise EmptyEnsemble("weighted risk of an empty sample")
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    missed = int(np.sum(~left & (y == 1)))
    false_alarms = int(np.sum(left & (y == -1)))
    return 2.0 / m * ((1.0 - omega) * missed + omega * false_alarms)


def leaf_label(n_pos, n_neg, omega):
    """Label minimizing the local weighted risk; ties go to -1."""
    return 1 if (1.0 - omega) * n_pos > omega * n_neg else -1


@dataclass
class _Node:
    n_pos: int
    n_neg: int
    label: int
    feature: int = -1
    threshold: float = float("nan")
    left: "_Node" = None
    right: "_Node" = None

    @property
    def is_leaf(self):
        return self.left is None


class CostSensitiveTree:
    """Axis-aligned binary classifier; ``x[feature] <= threshold`` goes left."""

    def __init__(self, root, n_features, omega, max_leaves):
        self.root = root
        self.n_features = int(n_features)
        self.omega = float(omega)
        self.max_leaves = int(max_leaves)

    def _walk(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))

    @property
    def n_leaves(self):
        return sum(1 for n in self._walk() if n.is_leaf)

    @property
    def n_splits(self):
        return self.n_leaves - 1

    def features_used(self):
        return sorted({n.feature for n in self._walk() if not n.is_leaf})

    def predict(self, X):
        """Labels (+1/-1) for the rows of ``X`` (a single vector is accepted)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise IndexMismatch(f"expected {self.n_features} features, got shape {X.shape}")
        out = np.empty(X.shape[0], dtype=int)
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if node.is_leaf:
                out[rows] = node.label
                continue
            go_left = X[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))
        return int(out[0]) if single else out

    def risk(self, X, y):
        return weighted_risk(self.predict(X) == 1, y, self.omega)

    def to_dict(self):
        def enc(node):
            if node.is_leaf:
                return {"leaf": node.label, "n_pos": node.n_pos, "n_neg": node.n_neg}
            return {
                "feature": node.feature,
                "threshold": node.threshold,
                "n_pos": node.n_pos,
                "n_neg": node.n_neg,
                "label": node.label,
                "left": enc(node.left),
                "right": enc(node.right),
            }

        return {
            "n_features": self.n_features,
            "omega": self.omega,
            "max_leaves": self.max_leaves,
            "root": enc(self.root),
        }

    @classmethod
    def from_dict(cls, d):
        def dec(e):
            if "leaf" in e:
                return _Node(e["n_pos"], e["n_neg"], int(e["leaf"]))
            return _Node(e["n_pos"], e["n_neg"], int(e["label"]), int(e["feature"]),
                         float(e["threshold"]), dec(e["left"]), dec(e["right"]))

        return cls(dec(d["root"]), d["n_features"], d["omega"], d["max_leaves"])


def predict(tree, features):
    return tree.predict(features)


def _impurity(wp, wn):
    w = wp + wn
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(w > 0, w - (wp * wp + wn * wn) / np.where(w > 0, w, 1.0), 0.0)


def _risk(cp, cn, omega):
    return np.minimum(omega * cn, (1.0 - omega) * cp)


def _best_split(X, y, omega, min_node, criterion, keys):
    """Best (feature, threshold) for one node, or None.

    Returns ``(gain, feature, threshold, go_left_mask)`` where ``gain`` is the
    decrease of the primary criterion.
    """
    m, F = X.shape
    if m < 2 * min_node:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    pos = (y[order] == 1).astype(np.int64)
    cp = np.cumsum(pos, axis=0)[:-1]
    cn = np.arange(1, m)[:, None] - cp
    tp, tn = cp[-1] + pos[-1], m - (cp[-1] + pos[-1])
    valid = xs[1:] > xs[:-1]
    sizes = np.arange(1, m)[:, None]
    valid &= (sizes >= min_node) & (m - sizes >= min_node)
    if not valid.any():
        return None
    wp, wn = 2.0 * (1.0 - omega), 2.0 * omega
    gini = _impurity(wp * cp, wn * cn) + _impurity(wp * (tp - cp), wn * (tn - cn))
    gini_parent = float(_impurity(wp * tp[0], wn * tn[0]))
    if criterion == "gini":
        primary, parent = gini, gini_parent
        secondary = None
    elif criterion == "risk":
        primary = _risk(cp, cn, omega) + _risk(tp - cp, tn - cn, omega)
        parent = float(_risk(tp[0], tn[0], omega))
        secondary = gini
    else:
        raise ValueError(f"unknown split criterion {criterion!r}")
    cand = valid.copy()
    for crit in (primary, secondary):
        if crit is None:
            continue
        best = crit[cand].min()
        cand &= crit <= best + _TIE_RTOL * max(1.0, abs(best))
    # remaining ties: smallest feature key, then smallest threshold
    rows, cols = np.nonzero(cand)
    thr = (xs[rows, cols] + xs[rows + 1, cols]) / 2.0
    pick = np.lexsort((thr, keys[cols]))[0]
    i, f = rows[pick], cols[pick]
    gain = parent - float(primary[i, f])
    return gain, int(f), float(thr[pick]), X[:, f] <= thr[pick]


def train(X, y, omega, max_leaves=8, min_node=5, *, criterion="gini", tie_keys=None):
    """Grow a cost-sensitive classification tree best-first.

    Parameters
    ----------
    X : array_like, shape (m, N)
    y : array_like of +1/-1
    omega : float in (0, 1)
        Cost put on false positives; positives missed cost ``1 - omega``.
    max_leaves : int
        Leaf budget. Leaves are expanded in order of decreasing criterion
        gain, so the tree with budget ``k + 1`` refines the one with ``k``.
    min_node : int
        Minimum number of samples in each child of a split.
    criterion : {"gini", "risk"}
        ``"gini"`` uses cost-weighted Gini impurity; ``"risk"`` minimizes
        the weighted risk directly and breaks ties with Gini.
    tie_keys : array_like of int, optional
        Per-feature keys used to break ties between equally good splits
        (smallest key wins). Defaults to the column index.

    Leaves are labelled with :func:`leaf_label`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = as_labels(y).ravel()
    if X.shape[0] == 0 or y.size == 0:
        raise EmptyEnsemble("cannot train on an empty sample")
    if X.ndim != 2 or X.shape[1] == 0:
        raise InvalidFeatures("need at least one feature")
    if X.shape[0] != y.size:
        raise IndexMismatch("features and labels differ in length")
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    keys = np.arange(X.shape[1]) if tie_keys is None else np.asarray(tie_keys)
    if keys.shape != (X.shape[1],):
        raise IndexMismatch("tie_keys must have one entry per feature")

    def make(rows):
        p = int(np.sum(y[rows] == 1))
        n = rows.size - p
        return _Node(p, n, leaf_label(p, n, omega))

    root = make(np.arange(y.size))
    frontier = []  # (node, rows, split) in creation order

    def push(node, rows):
        split = None
        if node.n_pos and node.n_neg:
            split = _best_split(X[rows], y[rows], omega, max(1, min_node), criterion, keys)
        frontier.append((node, rows, split))

    push(root, np.arange(y.size))
    n_leaves = 1
    while n_leaves < max_leaves:
        best = None
        for idx, (_, _, split) in enumerate(frontier):
            if split is not None and (best is None or split[0] > frontier[best][2][0]):
                best = idx
        if best is None:
            break
        node, rows, (_, f, thr, go_left) = frontier.pop(best)
        node.feature, node.threshold = f, thr
        left_rows, right_rows = rows[go_left], rows[~go_left]
        node.left, node.right = make(left_rows), make(right_rows)
        push(node.left, left_rows)
        push(node.right, right_rows)
        n_leaves += 1
    return CostSensitiveTree(root, X.shape[1], omega, max_leaves)
