"""Choice of the filter dimension by complexity-penalized training AUC."""
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import FTreeRankError, InvalidCount, SelectionFailed
from .treerank import grow_functional

__all__ = ["PenaltySchedule", "penalty", "select_dimension", "SelectionReport", "DEFAULT_CANDIDATES"]

# 0.5% .. 10% of a length-2048 curve
DEFAULT_CANDIDATES = (10, 20, 51, 102, 205)


@dataclass(frozen=True)
class PenaltySchedule:
    """Capacity ``V_N = c_v * N`` of the scoring class on N features."""

    c_v: float = 1.0

    def vc_dim(self, N):
        if N < 1:
            raise InvalidCount(f"N must be >= 1, got {N}")
        return self.c_v * N


def penalty(N, n, schedule=None):
    """``4 * sqrt((V_N * ln(n + 1) + ln 2) / n)``."""
    if n < 1:
        raise InvalidCount(f"sample size must be >= 1, got {n}")
    schedule = schedule or PenaltySchedule()
    return 4.0 * math.sqrt((schedule.vc_dim(N) * math.log(n + 1) + math.log(2)) / n)


@dataclass
class SelectionReport:
    rows: list  # dicts with N, auc, pen, cpauc, selected
    selected: int
    failures: dict

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "auc", "pen", "cpauc", "selected"])
        for r in self.rows:
            w.writerow([r["N"], repr(r["auc"]), repr(r["pen"]), repr(r["cpauc"]), int(r["selected"])])
        return buf.getvalue()


def select_dimension(data, candidates=DEFAULT_CANDIDATES, schedule=None, *, grower=grow_functional,
                     use_penalty=True, **grow_kw):
    """Pick N maximizing training AUC minus :func:`penalty`.

    Every candidate is fitted with ``grower(data, N, **grow_kw)``. Ties go
    to the smallest N. Candidates whose fit raises are listed in
    ``failures``; if all fail :class:`SelectionFailed` is raised.
    ``use_penalty=False`` reduces the rule to plain training-AUC argmax.
    """
    cands = sorted({int(c) for c in candidates})
    if not cands:
        raise InvalidCount("no candidate dimension given")
    n = len(data)
    rows, failures = [], {}
    for N in cands:
        try:
            tree = grower(data, N, **grow_kw)
        except FTreeRankError as exc:
            failures[N] = f"{type(exc).__name__}: {exc}"
            continue
        pen = penalty(N, n, schedule) if use_penalty else 0.0
        rows.append({"N": N, "auc": float(tree.train_auc), "pen": pen, "cpauc": tree.train_auc - pen,
                     "selected": False})
    if not rows:
        raise SelectionFailed(f"every candidate failed: {failures}")
    scores = np.array([r["cpauc"] for r in rows])
    best = int(np.flatnonzero(scores == scores.max())[0])
    rows[best]["selected"] = True
    return SelectionReport(rows, rows[best]["N"], failures)
