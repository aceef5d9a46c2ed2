"""Selection of wavelet coefficient subsets and projection of curves onto them.

A :class:`FilterIndexSet` is an ordered list of ``(j, k)`` coefficient
addresses (plus a sensor id for multi-sensor curves). Three ways to build
one are provided:

* :func:`linear_index_set` -- every coefficient up to a resolution level;
* :func:`top_variance_index_set` -- the N coefficients with the largest
  empirical second moment over an ensemble;
* :func:`threshold_index_set` -- level-dependent hard thresholding of the
  empirical second moments.
"""
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEnsemble, IndexMismatch, InvalidCount, InvalidScale
from .wavelet import CoefficientSet, dwt_forward, dwt_inverse, flat_index, level_of, log2_length

__all__ = [
    "FilterIndexSet",
    "FeatureVector",
    "linear_index_set",
    "top_variance_index_set",
    "threshold_index_set",
    "apply_filter",
    "distortion",
    "second_moments",
]


@dataclass(frozen=True, eq=False)
class FilterIndexSet:
    """Ordered set of wavelet coefficient addresses.

    ``indices`` holds ``(j, k)`` pairs where level ``j0 - 1`` denotes the
    scaling coefficients. ``sensors`` is ``None`` for single-channel
    curves, otherwise the channel of each index.
    """

    indices: tuple
    j0: int
    jmax_used: int
    mode: str = "custom"
    family: str = ""
    sensors: tuple = None

    def __post_init__(self):
        idx = tuple((int(j), int(k)) for j, k in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.sensors is not None:
            sens = tuple(int(s) for s in self.sensors)
            if len(sens) != len(idx):
                raise IndexMismatch("sensors and indices differ in length")
            object.__setattr__(self, "sensors", sens)
        keys = self._keys()
        if len(set(keys)) != len(keys):
            raise IndexMismatch("duplicate coefficient index")
        for j, k in idx:
            if not self.j0 - 1 <= j <= self.jmax_used:
                raise InvalidScale(f"index ({j}, {k}) outside levels [{self.j0 - 1}, {self.jmax_used}]")
            if not 0 <= k < (1 << max(j, self.j0)):
                raise InvalidScale(f"position {k} out of range at level {j}")

    def _keys(self):
        if self.sensors is None:
            return list(self.indices)
        return list(zip(self.sensors, self.indices))

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if not isinstance(other, FilterIndexSet):
            return NotImplemented
        return (self.indices, self.j0, self.jmax_used, self.sensors) == (
            other.indices, other.j0, other.jmax_used, other.sensors)

    def __hash__(self):
        return hash((self.indices, self.j0, self.jmax_used, self.sensors))

    def positions(self, length):
        """Flat positions into a (sensor-concatenated) coefficient pool."""
        cache = self.__dict__.setdefault("_pos_cache", {})
        if length not in cache:
            pos = self._positions(length)
            pos.setflags(write=False)
            cache[length] = pos
        return cache[length]

    def _positions(self, length):
        pos = np.array([flat_index(j, k, self.j0) for j, k in self.indices], dtype=np.intp)
        if pos.size and pos.max() >= length:
            raise IndexMismatch(f"filter reaches beyond a length-{length} coefficient vector")
        if self.sensors is not None:
            pos = pos + length * np.asarray(self.sensors, dtype=np.intp)
        return pos

    def to_dict(self):
        d = {
            "indices": [[j, k] for j, k in self.indices],
            "j0": self.j0,
            "jmax": self.jmax_used,
            "mode": self.mode,
            "family": self.family,
        }
        if self.sensors is not None:
            d["sensors"] = list(self.sensors)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(tuple(p) for p in d["indices"]),
            int(d["j0"]),
            int(d["jmax"]),
            d.get("mode", "custom"),
            d.get("family", ""),
            tuple(d["sensors"]) if d.get("sensors") is not None else None,
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    provenance: FilterIndexSet

    def __len__(self):
        return self.values.shape[-1]


def _pool(coeffs):
    """Return (matrix of shape (m, S*n), per-sensor length, n_sensors)."""
    if isinstance(coeffs, CoefficientSet):
        sets = [coeffs]
    else:
        sets = list(coeffs)
        if not sets:
            raise EmptyEnsemble("no coefficient sets given")
    first = sets[0]
    for c in sets[1:]:
        if (c.j0, c.jmax, c.values.shape[-1]) != (first.j0, first.jmax, first.values.shape[-1]):
            raise IndexMismatch("coefficient sets are not index-compatible")
    rows = []
    for c in sets:
        v = np.asarray(c.values, dtype=float)
        if v.ndim == 1:
            v = v[None, None, :]
        elif v.ndim == 2:
            v = v[:, None, :]
        rows.append(v)
    v = np.concatenate(rows, axis=0) if len(rows) > 1 else rows[0]
    if v.shape[0] == 0:
        raise EmptyEnsemble("empty ensemble")
    m, S, n = v.shape
    return v.reshape(m, S * n), n, S, first.j0, first.jmax


def second_moments(matrix):
    """Column-wise mean of squares, computed order-independently.

    Summing the sorted squares makes the statistic invariant to the order
    of the curves, which keeps tie-breaking reproducible.
    """
    sq = np.sort(np.asarray(matrix, dtype=float) ** 2, axis=0)
    return sq.sum(axis=0) / sq.shape[0]


def _candidate_pool(n, S, j0, jmax):
    """Flat pool positions for levels j0-1..jmax (lexicographic (s, j, k) order)."""
    if jmax >= n.bit_length() - 1:
        raise InvalidScale(f"jmax={jmax} exceeds finest level {n.bit_length() - 2}")
    if jmax < j0 - 1:
        raise InvalidScale(f"jmax={jmax} below scaling level {j0 - 1}")
    width = 1 << (jmax + 1)
    per = np.arange(width)
    return (per[None, :] + n * np.arange(S)[:, None]).ravel()


def _make_set(pool_pos, n, S, j0, jmax, mode, family):
    idx = []
    sens = []
    for p in pool_pos:
        s, r = divmod(int(p), n)
        idx.append(level_of(r, j0))
        sens.append(s)
    return FilterIndexSet(tuple(idx), j0, jmax, mode, family, tuple(sens) if S > 1 else None)


def _rank(moments, positions):
    # descending moment, ties by ascending flat position == lexicographic (j, k)
    return np.lexsort((positions, -moments))


def linear_index_set(j, j0=0, *, n_sensors=1, family=""):
    """All ``2**j`` coefficients of the level-``j`` approximation space.

    That is the ``2**j0`` scaling coefficients plus the detail levels
    ``j0 .. j-1``, in lexicographic order.
    """
    if j < j0:
        raise InvalidScale(f"j={j} must be >= j0={j0}")
    idx = [(j0 - 1, k) for k in range(1 << j0)]
    idx += [(lvl, k) for lvl in range(j0, j) for k in range(1 << lvl)]
    if n_sensors > 1:
        sens = tuple(s for s in range(n_sensors) for _ in idx)
        idx = idx * n_sensors
    else:
        sens = None
    return FilterIndexSet(tuple(idx), j0, max(j - 1, j0 - 1), "linear", family, sens)


def top_variance_index_set(coeff_sets, N, j0=None, jmax=None, *, family=None):
    """The ``N`` indices with the largest empirical second moment.

    Parameters
    ----------
    coeff_sets : CoefficientSet or list of CoefficientSet
        A batch (or list) of coefficient sets computed with the same ``j0``.
    N : int
        Number of coefficients to keep.
    j0, jmax : int, optional
        Coarsest and finest levels considered. ``j0`` must match the
        coefficients; ``jmax`` defaults to the finest available level.
    """
    mat, n, S, cj0, cjmax = _pool(coeff_sets)
    j0 = cj0 if j0 is None else j0
    if j0 != cj0:
        raise IndexMismatch(f"coefficients were computed with j0={cj0}, not {j0}")
    jmax = cjmax if jmax is None else jmax
    cand = _candidate_pool(n, S, j0, jmax)
    if not 1 <= N <= cand.size:
        raise InvalidCount(f"N={N} outside [1, {cand.size}]")
    mom = second_moments(mat[:, cand])
    order = _rank(mom, cand)[:N]
    fam = family if family is not None else _family_of(coeff_sets)
    return _make_set(cand[order], n, S, j0, jmax, "top_variance", fam)


def threshold_index_set(coeff_sets, N, r=1.0, j0=None, jmax_cap=None, *, c=1.5, family=None):
    """Hard-threshold selection of coefficients by empirical second moment.

    Keeps every index at level ``j <= min(jmax_cap, ceil(c * log2 N))``
    whose second moment is at least ``sqrt(j_eff / N**(r + 1))`` with
    ``j_eff = max(j - j0 + 1, 1)``. The cardinality is data dependent.
    """
    if N < 1:
        raise InvalidCount(f"N must be >= 1, got {N}")
    if r <= 0:
        raise InvalidCount(f"r must be positive, got {r}")
    mat, n, S, cj0, cjmax = _pool(coeff_sets)
    j0 = cj0 if j0 is None else j0
    if j0 != cj0:
        raise IndexMismatch(f"coefficients were computed with j0={cj0}, not {j0}")
    jmax_cap = cjmax if jmax_cap is None else min(jmax_cap, cjmax)
    cap = min(jmax_cap, math.ceil(c * math.log2(N)))
    cap = max(cap, j0 - 1)
    cand = _candidate_pool(n, S, j0, cap)
    mom = second_moments(mat[:, cand])
    levels = np.array([level_of(p % n, j0)[0] for p in cand])
    j_eff = np.maximum(levels - j0 + 1, 1)
    keep = mom >= np.sqrt(j_eff / float(N) ** (r + 1))
    sel, mom = cand[keep], mom[keep]
    order = _rank(mom, sel)
    fam = family if family is not None else _family_of(coeff_sets)
    return _make_set(sel[order], n, S, j0, cap, "threshold", fam)


def _family_of(coeff_sets):
    if isinstance(coeff_sets, CoefficientSet):
        return coeff_sets.family
    return coeff_sets[0].family if coeff_sets else ""


def apply_filter(coeffs, filt):
    """Project coefficients onto ``filt``: ``values[..., l] = beta_{j(l), k(l)}``."""
    if coeffs.j0 != filt.j0:
        raise IndexMismatch(f"coefficients use j0={coeffs.j0}, filter expects {filt.j0}")
    if filt.jmax_used > coeffs.jmax:
        raise IndexMismatch("filter reaches finer levels than the coefficients")
    v = np.asarray(coeffs.values, dtype=float)
    n = v.shape[-1]
    if filt.sensors is not None:
        if v.ndim < 2 or v.shape[-2] <= max(filt.sensors):
            raise IndexMismatch("filter refers to sensors absent from the coefficients")
        v = v.reshape(v.shape[:-2] + (v.shape[-2] * n,))
    return FeatureVector(v[..., filt.positions(n)], filt)


def distortion(curve, filt, family="Haar"):
    """Squared L2 error between ``curve`` and its reconstruction from ``filt``.

    Works on a single curve or a batch (returns one value per curve).
    """
    x = np.asarray(curve, dtype=float)
    log2_length(x.shape[-1])
    coeffs = dwt_forward(x, family, filt.j0)
    n = x.shape[-1]
    kept = np.zeros_like(coeffs.values)
    if len(filt):
        flat_in = coeffs.values.reshape(coeffs.values.shape[:-2] + (-1,)) if filt.sensors is not None \
            else coeffs.values
        flat_out = kept.reshape(flat_in.shape)
        pos = filt.positions(n)
        flat_out[..., pos] = flat_in[..., pos]
    rec = dwt_inverse(coeffs.with_values(kept), family)
    err = (x - rec) ** 2
    if filt.sensors is not None:
        return err.sum(axis=(-2, -1))
    return err.sum(axis=-1)
