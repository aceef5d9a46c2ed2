"""ROC curves and exact, tie-corrected empirical AUC."""
import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, EmptyEnsemble

__all__ = [
    "RocCurve",
    "as_labels",
    "empirical_auc",
    "auc_brute_force",
    "roc_curve",
    "roc_envelope",
]


def as_labels(labels):
    """Coerce labels to an int array of -1/+1 (0/1 and booleans accepted)."""
    y = np.asarray(labels)
    if y.dtype == bool:
        return np.where(y, 1, -1)
    y = y.astype(int)
    vals = set(np.unique(y).tolist())
    if vals <= {-1, 1}:
        return y
    if vals <= {0, 1}:
        return 2 * y - 1
    raise ValueError(f"labels must be in {{-1, +1}} or {{0, 1}}, got {sorted(vals)}")


def _check(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = as_labels(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateSample("AUC needs at least one positive and one negative")
    return s, y, n_pos, n_neg


def _pair_counts(s, y):
    """Return twice the concordant count plus the cross-class tie count.

    Integer arithmetic throughout, so the result is exact.
    """
    _, inv = np.unique(s, return_inverse=True)
    n_groups = inv.max() + 1
    neg = np.bincount(inv[y == -1], minlength=n_groups)
    pos = np.bincount(inv[y == 1], minlength=n_groups)
    neg_below = np.cumsum(neg) - neg
    return int(np.sum(pos * (2 * neg_below + neg)))


def empirical_auc(scores, labels):
    """Empirical AUC with ties between classes counted one half.

    Equal to the fraction of (negative, positive) pairs in which the
    positive scores strictly higher, plus half the fraction of tied pairs.
    Runs in O(n log n).
    """
    s, y, n_pos, n_neg = _check(scores, labels)
    return _pair_counts(s, y) / (2 * n_pos * n_neg)


def auc_brute_force(scores, labels):
    """O(n^2) pair enumeration; reference implementation for tests."""
    s, y, n_pos, n_neg = _check(scores, labels)
    sn = s[y == -1]
    sp = s[y == 1]
    twice = 2 * int(np.sum(sn[:, None] < sp[None, :])) + int(np.sum(sn[:, None] == sp[None, :]))
    return twice / (2 * n_pos * n_neg)


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Polyline through (false positive rate, true positive rate) points."""

    fpr: np.ndarray
    tpr: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "fpr", np.asarray(self.fpr, dtype=float))
        object.__setattr__(self, "tpr", np.asarray(self.tpr, dtype=float))

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self):
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))

    def __call__(self, alpha):
        """TPR at false positive rate ``alpha``; vertical jumps take the upper value."""
        f, t = _upper_function(self.fpr, self.tpr)
        return np.interp(alpha, f, t)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for a, b in self.points:
            w.writerow([repr(a), repr(b)])
        return buf.getvalue()


def _upper_function(fpr, tpr):
    # keep the last (highest) TPR for each repeated FPR
    last = np.r_[fpr[1:] != fpr[:-1], True]
    return fpr[last], tpr[last]


def roc_curve(scores, labels):
    """Empirical ROC curve, one vertex per distinct score.

    Thresholds sweep from the highest score down; a group of tied scores
    containing both classes gives a diagonal segment, so the trapezoidal
    area equals :func:`empirical_auc`.
    """
    s, y, n_pos, n_neg = _check(scores, labels)
    uniq, inv = np.unique(s, return_inverse=True)
    neg = np.bincount(inv[y == -1], minlength=uniq.size)[::-1]
    pos = np.bincount(inv[y == 1], minlength=uniq.size)[::-1]
    fpr = np.r_[0.0, np.cumsum(neg) / n_neg]
    tpr = np.r_[0.0, np.cumsum(pos) / n_pos]
    return RocCurve(fpr, tpr)


def roc_envelope(curves, grid=101):
    """Pointwise lower, upper and mean TPR of ROC curves on a uniform FPR grid.

    Returns three :class:`RocCurve` objects. When the grid value at FPR 0
    is above zero, the point (0, 0) is prepended so every curve still
    starts at the origin.
    """
    curves = list(curves)
    if not curves:
        raise EmptyEnsemble("no ROC curves given")
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    alpha = np.linspace(0.0, 1.0, int(grid))
    tprs = np.vstack([c(alpha) for c in curves])

    def _mk(t):
        if t[0] > 0.0:
            return RocCurve(np.r_[0.0, alpha], np.r_[0.0, t])
        return RocCurve(alpha.copy(), t)

    return _mk(tprs.min(axis=0)), _mk(tprs.max(axis=0)), _mk(tprs.mean(axis=0))
