"""Ranking trees: TreeRank on fixed features and its functional variant.

A ranking tree is a binary heap of cells addressed ``(d, k)``; the left
child of ``(d, k)`` is ``(d + 1, 2k)``. Each inner node keeps the cost
``omega`` (positive rate of its cell), a cost-sensitive classifier and, in
the functional variant, the wavelet coefficients it reads. Leaves read
left to right give decreasing scores.

Three growers share one recursion:

* :func:`grow_standard` -- feature vectors in, every node sees all features;
* :func:`grow_filtered` -- curves in, one global wavelet filter, then
  :func:`grow_standard` (the "filtered TreeRank" baseline);
* :func:`grow_functional` -- curves in, each node picks its own wavelet
  coefficients from the curves in its cell.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import leafrank
from .errors import DegenerateSample, EmptyEnsemble, IndexMismatch, InvalidCount, InvalidScale
from .filtering import (
    FilterIndexSet,
    apply_filter,
    linear_index_set,
    threshold_index_set,
    top_variance_index_set,
)
from .metrics import as_labels, empirical_auc
from .wavelet import CoefficientSet, dwt_forward, family_taps, log2_length

__all__ = [
    "LabeledCurveSet",
    "RankNode",
    "RankingTree",
    "grow_standard",
    "grow_filtered",
    "grow_functional",
    "score_tree",
    "pruning_sequence",
    "prune",
    "stratified_folds",
]

SELECTION_MODES = ("linear", "top_variance", "threshold")


@dataclass(eq=False)
class LabeledCurveSet:
    """Labelled curves, shape ``(m, n)`` or ``(m, sensors, n)``.

    ``components`` and ``oracle_scores`` are only known for synthetic data.
    Coefficients are cached per ``(family, j0)``.
    """

    curves: np.ndarray
    labels: np.ndarray
    components: np.ndarray = None
    oracle_scores: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.curves = np.asarray(self.curves, dtype=float)
        self.labels = as_labels(self.labels).ravel()
        if self.curves.ndim not in (2, 3):
            raise IndexMismatch("curves must have shape (m, n) or (m, sensors, n)")
        if self.curves.shape[0] != self.labels.size:
            raise IndexMismatch("curves and labels differ in length")
        log2_length(self.curves.shape[-1])
        if not np.all(np.isfinite(self.curves)):
            raise DegenerateSample("curves contain non-finite samples")
        self._cache = {}

    def __len__(self):
        return self.labels.size

    @property
    def length(self):
        return self.curves.shape[-1]

    @property
    def n_sensors(self):
        return 1 if self.curves.ndim == 2 else self.curves.shape[1]

    def coefficients(self, family, j0):
        key = (family_taps(family).name, int(j0))
        if key not in self._cache:
            self._cache[key] = dwt_forward(self.curves, key[0], key[1])
        return self._cache[key]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        out = LabeledCurveSet(
            self.curves[rows],
            self.labels[rows],
            None if self.components is None else self.components[rows],
            None if self.oracle_scores is None else self.oracle_scores[rows],
            dict(self.meta),
        )
        for key, c in self._cache.items():
            out._cache[key] = c.with_values(c.values[rows])
        return out


def _pool_matrix(coeffs):
    v = coeffs.values
    if v.ndim == 1:
        v = v[None, :]
    return v.reshape(v.shape[0], -1)


@dataclass(eq=False)
class RankNode:
    d: int
    k: int
    n: int
    n_pos: int
    omega: float = None
    filter: FilterIndexSet = None
    classifier: leafrank.CostSensitiveTree = None
    merged: bool = False

    @property
    def is_leaf(self):
        return self.classifier is None

    def to_dict(self):
        out = {"d": self.d, "k": self.k, "n": self.n, "n_pos": self.n_pos, "merged": self.merged}
        if not self.is_leaf:
            out["omega"] = self.omega
            out["classifier"] = self.classifier.to_dict()
            out["filter"] = None if self.filter is None else self.filter.to_dict()
        return out

    @classmethod
    def from_dict(cls, e):
        node = cls(int(e["d"]), int(e["k"]), int(e["n"]), int(e["n_pos"]), merged=bool(e.get("merged")))
        if "classifier" in e:
            node.omega = float(e["omega"])
            node.classifier = leafrank.CostSensitiveTree.from_dict(e["classifier"])
            node.filter = None if e.get("filter") is None else FilterIndexSet.from_dict(e["filter"])
        return node


class RankingTree:
    """Oriented binary ranking tree.

    Parameters
    ----------
    nodes : dict
        ``(d, k) -> RankNode``.
    kind : {"standard", "functional"}
    params : dict
        Grower name and keyword arguments; used to refit during pruning.
    input_filter : FilterIndexSet, optional
        Global filter applied to curves before a standard tree sees them.
    """

    def __init__(self, nodes, kind, params=None, input_filter=None):
        self.nodes = dict(nodes)
        self.kind = kind
        self.params = dict(params or {})
        self.input_filter = input_filter
        self.train_auc = None
        self.cv_report = None

    # structure ----------------------------------------------------------
    @property
    def depth(self):
        return max(d for d, _ in self.nodes)

    def _position(self, addr):
        d, k = addr
        return k << (self.depth - d)

    def leaves(self):
        """Leaf addresses ordered left to right."""
        return sorted((a for a, n in self.nodes.items() if n.is_leaf), key=self._position)

    @property
    def n_leaves(self):
        return sum(1 for n in self.nodes.values() if n.is_leaf)

    def leaf_scores(self):
        """``{address: score}``; the leftmost leaf scores ``n_leaves``."""
        leaves = self.leaves()
        return {a: len(leaves) - i for i, a in enumerate(leaves)}

    def collapse(self, addr):
        """Copy of the tree with the subtree below ``addr`` merged into one leaf."""
        d0, k0 = addr
        keep = {}
        for (d, k), node in self.nodes.items():
            if d > d0 and (k >> (d - d0)) == k0:
                continue
            keep[(d, k)] = node
        old = self.nodes[addr]
        keep[addr] = RankNode(old.d, old.k, old.n, old.n_pos, merged=True)
        out = RankingTree(keep, self.kind, self.params, self.input_filter)
        return out

    # scoring -------------------------------------------------------------
    @property
    def family(self):
        return self.params.get("family")

    @property
    def j0(self):
        return self.params.get("j0")

    def _features(self, inputs):
        """Matrix the node classifiers read: raw features or the coefficient pool."""
        if self.kind == "standard" and self.input_filter is None:
            if isinstance(inputs, LabeledCurveSet):
                raise IndexMismatch("standard tree without an input filter expects feature vectors")
            X = np.asarray(inputs, dtype=float)
            if X.ndim == 1:
                # a 1-D array is a column of scalars for one-feature trees
                return X[:, None] if self.params.get("n_features") == 1 else X[None, :]
            return X
        if isinstance(inputs, LabeledCurveSet):
            coeffs = inputs.coefficients(self.family, self.j0)
        elif isinstance(inputs, CoefficientSet):
            coeffs = inputs
        else:
            x = np.asarray(inputs, dtype=float)
            if x.ndim == 1:
                x = x[None, :]
            coeffs = dwt_forward(x, self.family, self.j0)
        if coeffs.j0 != self.j0 or coeffs.values.shape[-1] != self.params.get("length", coeffs.values.shape[-1]):
            raise IndexMismatch("coefficients do not match the tree's filtering parameters")
        if self.input_filter is not None:
            F = apply_filter(coeffs, self.input_filter).values
            return F.reshape(-1, F.shape[-1])
        return _pool_matrix(coeffs)

    def _node_view(self, node, M):
        if self.kind == "functional":
            return M[:, node.filter.positions(self.params["length"])]
        return M

    def leaf_addresses(self, inputs):
        """Leaf reached by each input, as an ``(m, 2)`` array of ``(d, k)``."""
        M = self._features(inputs)
        out = np.zeros((M.shape[0], 2), dtype=int)
        stack = [((0, 0), np.arange(M.shape[0]))]
        while stack:
            addr, rows = stack.pop()
            node = self.nodes[addr]
            if node.is_leaf or rows.size == 0:
                out[rows] = addr
                continue
            go_left = node.classifier.predict(self._node_view(node, M[rows])) == 1
            d, k = addr
            stack.append(((d + 1, 2 * k), rows[go_left]))
            stack.append(((d + 1, 2 * k + 1), rows[~go_left]))
        return out

    def scores_from_addresses(self, addrs):
        """Scores for leaf addresses of this tree or of any refinement of it."""
        table = self.leaf_scores()
        out = np.empty(len(addrs))
        for i, (d, k) in enumerate(np.asarray(addrs)):
            while (d, k) not in table:
                d, k = d - 1, k >> 1
            out[i] = table[(d, k)]
        return out

    def score(self, inputs):
        return self.scores_from_addresses(self.leaf_addresses(inputs))

    # serialization -------------------------------------------------------
    def to_dict(self):
        return {
            "kind": self.kind,
            "params": self.params,
            "input_filter": None if self.input_filter is None else self.input_filter.to_dict(),
            "train_auc": self.train_auc,
            "nodes": [self.nodes[a].to_dict() for a in sorted(self.nodes)],
        }

    @classmethod
    def from_dict(cls, d):
        nodes = {}
        for e in d["nodes"]:
            node = RankNode.from_dict(e)
            nodes[(node.d, node.k)] = node
        filt = d.get("input_filter")
        tree = cls(nodes, d["kind"], d.get("params"), None if filt is None else FilterIndexSet.from_dict(filt))
        tree.train_auc = d.get("train_auc")
        return tree

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"RankingTree(kind={self.kind!r}, depth={self.depth}, leaves={self.n_leaves})"


def score_tree(tree, inputs):
    """Score curves / feature vectors with a grown tree."""
    return tree.score(inputs)


def _grow(y, depth, featurize, leaf_params, min_split):
    nodes = {}

    def build(d, k, rows):
        p = int(np.sum(y[rows] == 1))
        node = RankNode(d, k, int(rows.size), p)
        nodes[(d, k)] = node
        if d >= depth or p == 0 or p == rows.size or rows.size < min_split:
            return
        omega = p / rows.size
        filt, X, keys = featurize(rows)
        if X.shape[1] == 0:
            return
        clf = leafrank.train(X, y[rows], omega, tie_keys=keys, **leaf_params)
        go_left = clf.predict(X) == 1
        if go_left.all() or not go_left.any():
            return
        node.omega, node.filter, node.classifier = omega, filt, clf
        build(d + 1, 2 * k, rows[go_left])
        build(d + 1, 2 * k + 1, rows[~go_left])

    build(0, 0, np.arange(y.size))
    return nodes


def _leaf_params(max_leaves, min_node, criterion):
    return {"max_leaves": int(max_leaves), "min_node": int(min_node), "criterion": criterion}


def grow_standard(X, y, depth=4, *, max_leaves=8, min_node=5, min_split=20, criterion="gini",
                  tie_keys=None):
    """TreeRank on fixed feature vectors.

    At each cell the cost is the positive rate of the cell and the
    predicted-positive region of the cost-sensitive classifier becomes the
    left child. A cell becomes a leaf when it is pure, has fewer than
    ``min_split`` points, sits at ``depth``, or its split is one-sided.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = as_labels(y).ravel()
    if X.shape[0] != y.size:
        raise IndexMismatch("features and labels differ in length")
    if y.size == 0:
        raise EmptyEnsemble("empty training set")
    if np.all(y == 1) or np.all(y == -1):
        raise DegenerateSample("both classes are required at the root")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    keys = np.arange(X.shape[1]) if tie_keys is None else np.asarray(tie_keys)

    def featurize(rows):
        return None, X[rows], keys

    nodes = _grow(y, depth, featurize, _leaf_params(max_leaves, min_node, criterion), min_split)
    params = {"grower": "standard", "n_features": X.shape[1], "depth": depth, "max_leaves": max_leaves, "min_node": min_node,
              "min_split": min_split, "criterion": criterion}
    tree = RankingTree(nodes, "standard", params)
    tree.train_auc = empirical_auc(tree.score(X), y)
    return tree


def _resolve_levels(length, j0, j):
    L = log2_length(length)
    if not 0 <= j0 <= L - 1:
        raise InvalidScale(f"j0 must lie in [0, {L - 1}], got {j0}")
    jmax = L - 1 if j is None else int(j) - 1
    if not j0 - 1 <= jmax <= L - 1:
        raise InvalidScale(f"finest level j={j} incompatible with j0={j0} and length {length}")
    return jmax


def select_filter(coeffs, mode, n_coefs, j0, jmax, *, r=1.0, c=1.5, family=""):
    """Build a filter on ``coeffs`` with one of the selection modes."""
    if mode == "top_variance":
        return top_variance_index_set(coeffs, n_coefs, j0, jmax, family=family)
    if mode == "threshold":
        return threshold_index_set(coeffs, n_coefs, r, j0, jmax, c=c, family=family)
    if mode == "linear":
        S = 1 if coeffs.values.ndim < 3 else coeffs.values.shape[1]
        full = linear_index_set(jmax + 1, j0, family=family)
        total = len(full) * S
        if not 1 <= n_coefs <= total:
            raise InvalidCount(f"N={n_coefs} outside [1, {total}]")
        # coarse-to-fine order; sensors interleaved level by level
        pairs = [(s, idx) for idx in full.indices for s in range(S)][:n_coefs]
        return FilterIndexSet(tuple(p for _, p in pairs), j0, jmax, "linear", family,
                              tuple(s for s, _ in pairs) if S > 1 else None)
    raise ValueError(f"unknown selection mode {mode!r}; expected one of {SELECTION_MODES}")


def grow_filtered(data, n_coefs, depth=4, *, family="Beylkin", j0=1, j=None, selection="top_variance",
                  r=1.0, c=1.5, max_leaves=8, min_node=5, min_split=20, criterion="gini"):
    """Filtered TreeRank: one global wavelet filter, then :func:`grow_standard`."""
    jmax = _resolve_levels(data.length, j0, j)
    coeffs = data.coefficients(family, j0)
    filt = select_filter(coeffs, selection, n_coefs, j0, jmax, r=r, c=c, family=family_taps(family).name)
    if len(filt) == 0:
        raise InvalidCount("global filter selected no coefficient")
    X = apply_filter(coeffs, filt).values.reshape(len(data), -1)
    tree = grow_standard(X, data.labels, depth, max_leaves=max_leaves, min_node=min_node,
                         min_split=min_split, criterion=criterion, tie_keys=filt.positions(data.length))
    tree.input_filter = filt
    tree.params.update({"grower": "filtered", "n_coefs": n_coefs, "family": family_taps(family).name,
                        "j0": j0, "j": j, "selection": selection, "r": r, "c": c,
                        "length": data.length, "n_sensors": data.n_sensors})
    return tree


def grow_functional(data, n_coefs, depth=4, *, family="Beylkin", j0=1, j=None, selection="top_variance",
                    r=1.0, c=1.5, max_leaves=8, min_node=5, min_split=20, criterion="gini"):
    """Functional TreeRank with locally adaptive wavelet filtering.

    At every node ``(d, k)``:

    1. the cost is the positive rate of the curves in the cell;
    2. the ``n_coefs`` coefficients are selected from the cell's curves only
       (largest local second moment for ``selection="top_variance"``);
    3. a cost-sensitive tree is trained on those local features;
    4. its predicted-positive region becomes the left child.

    Parameters
    ----------
    data : LabeledCurveSet
    n_coefs : int
        Coefficients kept per node (the target scale for thresholding).
    j : int, optional
        Filtering resolution: detail levels up to ``j - 1`` are eligible.
        Defaults to all levels.
    """
    if len(data) == 0:
        raise EmptyEnsemble("empty training set")
    y = data.labels
    if np.all(y == 1) or np.all(y == -1):
        raise DegenerateSample("both classes are required at the root")
    jmax = _resolve_levels(data.length, j0, j)
    coeffs = data.coefficients(family, j0)
    fam = family_taps(family).name
    M = _pool_matrix(coeffs)
    n = data.length

    def featurize(rows):
        local = coeffs.with_values(coeffs.values[rows])
        filt = select_filter(local, selection, n_coefs, j0, jmax, r=r, c=c, family=fam)
        pos = filt.positions(n)
        return filt, M[rows][:, pos], pos

    nodes = _grow(y, depth, featurize, _leaf_params(max_leaves, min_node, criterion), min_split)
    params = {"grower": "functional", "depth": depth, "n_coefs": n_coefs, "family": fam, "j0": j0,
              "j": j, "selection": selection, "r": r, "c": c, "max_leaves": max_leaves,
              "min_node": min_node, "min_split": min_split, "criterion": criterion,
              "length": n, "n_sensors": data.n_sensors}
    tree = RankingTree(nodes, "functional", params)
    tree.train_auc = empirical_auc(tree.score(coeffs), y)
    return tree


_GROW_KEYS = ("depth", "max_leaves", "min_node", "min_split", "criterion")
_FILTER_KEYS = ("family", "j0", "j", "selection", "r", "c")


def refit(tree, data, y=None):
    """Grow a tree with ``tree``'s settings on new data."""
    p = tree.params
    kw = {k: p[k] for k in _GROW_KEYS if k in p}
    grower = p.get("grower", "standard")
    if grower == "standard":
        X = data
        return grow_standard(X, y, **kw)
    kw.update({k: p[k] for k in _FILTER_KEYS if k in p})
    fn = grow_functional if grower == "functional" else grow_filtered
    return fn(data, p["n_coefs"], **kw)


def pruning_sequence(tree, inputs, y):
    """Nested subtrees from ``tree`` down to the root, one merge at a time.

    At each step the sibling pair whose merge keeps the highest AUC on
    ``(inputs, y)`` is merged (ties: deepest, then leftmost node).
    """
    y = as_labels(y)
    addrs = tree.leaf_addresses(inputs)
    seq = [tree]
    cur = tree
    while cur.n_leaves > 1:
        best = None
        for (d, k), node in cur.nodes.items():
            if node.is_leaf:
                continue
            if not (cur.nodes[(d + 1, 2 * k)].is_leaf and cur.nodes[(d + 1, 2 * k + 1)].is_leaf):
                continue
            cand = cur.collapse((d, k))
            auc = empirical_auc(cand.scores_from_addresses(addrs), y)
            key = (auc, d, -k)
            if best is None or key > best[0]:
                best = (key, cand)
        cur = best[1]
        seq.append(cur)
    return seq


def _subtree_with_at_most(seq, size):
    for t in seq:
        if t.n_leaves <= size:
            return t
    return seq[-1]


def stratified_folds(y, n_folds, rng):
    """Fold id per sample; class counts per fold differ by at most one."""
    y = as_labels(y)
    fold = np.empty(y.size, dtype=int)
    offset = 0
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (np.arange(idx.size) + offset) % n_folds
        offset += idx.size
    return fold


def _split(data, y, rows):
    if isinstance(data, LabeledCurveSet):
        return data.subset(rows), None
    return np.asarray(data)[rows], y[rows]


def prune(tree, data, y=None, *, method="v_fold", folds=4, holdout=0.25, seed=0, se_rule=1.0):
    """Merge sibling leaves to maximize a cross-validated AUC estimate.

    For every validation split a tree with the same settings is grown on
    the training part and its :func:`pruning_sequence` is scored on the
    held-out part, giving an AUC for each leaf budget. The budget with the
    highest mean AUC (smallest budget on ties) is then applied to the
    pruning sequence of ``tree`` itself.

    With ``se_rule > 0`` the smallest budget whose mean AUC is within
    ``se_rule`` standard errors of the best is taken instead, which
    favours small trees when the estimates are flat. The standard error is
    the fold spread over ``sqrt(folds)``; a single holdout split has none.
    ``se_rule=0`` maximizes the estimate outright.

    ``data`` is a :class:`LabeledCurveSet` for curve trees, or a feature
    matrix (with ``y``) for standard trees.
    """
    if isinstance(data, LabeledCurveSet):
        y = data.labels
    else:
        y = as_labels(y)
    rng = np.random.default_rng(seed)
    if method == "v_fold":
        if folds < 2:
            raise ValueError("need at least two folds")
        if min(np.sum(y == 1), np.sum(y == -1)) < folds:
            raise DegenerateSample("too few samples of a class for the requested folds")
        fold = stratified_folds(y, folds, rng)
        splits = [(np.flatnonzero(fold != f), np.flatnonzero(fold == f)) for f in range(folds)]
    elif method == "holdout":
        fold = stratified_folds(y, max(2, int(round(1.0 / holdout))), rng)
        splits = [(np.flatnonzero(fold != 0), np.flatnonzero(fold == 0))]
        if min(np.sum(y[splits[0][1]] == 1), np.sum(y[splits[0][1]] == -1)) == 0:
            raise DegenerateSample("holdout part lacks a class")
    else:
        raise ValueError(f"unknown validation method {method!r}")

    full_seq = pruning_sequence(tree, data, y)
    sizes = np.arange(1, tree.n_leaves + 1)
    per_split = np.zeros((len(splits), sizes.size))
    for row, (train_rows, test_rows) in enumerate(splits):
        tr_data, tr_y = _split(data, y, train_rows)
        te_data, _ = _split(data, y, test_rows)
        sub = refit(tree, tr_data, tr_y)
        sub_y = tr_data.labels if tr_y is None else tr_y
        seq = pruning_sequence(sub, tr_data, sub_y)
        addrs = seq[0].leaf_addresses(te_data)
        for i, s in enumerate(sizes):
            t = _subtree_with_at_most(seq, s)
            per_split[row, i] = empirical_auc(t.scores_from_addresses(addrs), y[test_rows])
    cv = per_split.mean(axis=0)
    best_i = int(np.flatnonzero(cv == cv.max())[0])
    if se_rule > 0 and len(splits) > 1:
        se = per_split[:, best_i].std(ddof=1) / np.sqrt(len(splits))
        floor = cv[best_i] - se_rule * se
        best_i = int(np.flatnonzero(cv >= floor)[0])
    best = int(sizes[best_i])
    out = _subtree_with_at_most(full_seq, best)
    out.train_auc = empirical_auc(out.score(data), y)
    out.cv_report = {"sizes": sizes.tolist(), "cv_auc": cv.tolist(), "selected": best}
    return out
