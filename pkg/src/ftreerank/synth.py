"""Synthetic labelled curves with a known optimal ranking.

Each of the ``K`` mixture components owns a disjoint set of wavelet atoms.
A curve from component ``k`` is a random combination of the atoms of
``E_k`` only, so the component can be read off the curve and the optimal
scorer ranks components by their likelihood ratio ``w+_k / w-_k``.
Components are numbered ``1..K`` in decreasing ratio order, which makes
``K - k + 1`` an optimal score and the optimal ROC the polyline through
the cumulated weights.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationFailed, InvalidCount, InvalidScale
from .metrics import RocCurve
from .treerank import LabeledCurveSet
from .wavelet import CoefficientSet, dwt_inverse, family_taps, level_of, log2_length

__all__ = [
    "MixtureSpec",
    "build_spec",
    "spec_from_weights",
    "optimal_auc",
    "optimal_roc",
    "sample",
    "sample_oracle",
    "power_law_ensemble",
    "spike_ensemble",
]


@dataclass(eq=False)
class MixtureSpec:
    """Mixture of curve laws over disjoint wavelet supports.

    ``atom_sets[k]`` holds the flat coefficient positions of component
    ``k + 1``. Amplitudes are drawn ``N(0, sigma**2 * 2**(-decay * j))``.
    """

    omega_plus: np.ndarray
    omega_minus: np.ndarray
    atom_sets: list
    family: str = "Beylkin"
    length: int = 2048
    j0: int = 1
    p: float = 0.5
    sigma: float = 1.0
    decay: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega_plus = np.asarray(self.omega_plus, dtype=float)
        self.omega_minus = np.asarray(self.omega_minus, dtype=float)
        self.atom_sets = [np.asarray(a, dtype=np.intp) for a in self.atom_sets]
        K = self.omega_plus.size
        if K < 2 or self.omega_minus.size != K or len(self.atom_sets) != K:
            raise InvalidCount("weights and atom sets must describe the same K >= 2 components")
        for w in (self.omega_plus, self.omega_minus):
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("mixture weights must be nonnegative and sum to one")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        log2_length(self.length)
        used = np.concatenate(self.atom_sets)
        if np.unique(used).size != used.size:
            raise ValueError("atom sets must be pairwise disjoint")
        if used.size and (used.min() < 0 or used.max() >= self.length):
            raise InvalidScale("atom position outside the coefficient vector")

    @property
    def K(self):
        return self.omega_plus.size

    def atom_scales(self, k):
        """Standard deviation of each atom amplitude of component ``k`` (1-based)."""
        levels = np.array([level_of(p, self.j0)[0] for p in self.atom_sets[k - 1]], dtype=float)
        return self.sigma * 2.0 ** (-self.decay * np.maximum(levels, 0) / 2.0)

    def to_dict(self):
        return {
            "omega_plus": self.omega_plus.tolist(),
            "omega_minus": self.omega_minus.tolist(),
            "atom_sets": [a.tolist() for a in self.atom_sets],
            "family": self.family,
            "length": self.length,
            "j0": self.j0,
            "p": self.p,
            "sigma": self.sigma,
            "decay": self.decay,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["omega_plus"], d["omega_minus"], d["atom_sets"], d["family"], int(d["length"]),
                   int(d["j0"]), float(d["p"]), float(d["sigma"]), float(d["decay"]), d.get("meta", {}))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _auc_from_weights(wp, wm):
    # sum_{k<l} w-_l w+_k + 1/2 sum_k w-_k w+_k
    below = np.cumsum(wm[::-1])[::-1] - wm  # sum_{l>k} w-_l
    return float(np.sum(wp * below) + 0.5 * np.sum(wp * wm))


def optimal_auc(spec):
    """Area under the optimal ROC polyline."""
    return _auc_from_weights(spec.omega_plus, spec.omega_minus)


def optimal_roc(spec):
    """Polyline through ``(0, 0)``, the cumulated weight knots and ``(1, 1)``."""
    fpr = np.r_[0.0, np.cumsum(spec.omega_minus)]
    tpr = np.r_[0.0, np.cumsum(spec.omega_plus)]
    fpr[-1] = tpr[-1] = 1.0
    return RocCurve(fpr, tpr)


def _tilted(wm, ratio, gamma):
    # log space: ratio ** gamma overflows for large gamma
    logw = np.log(wm) + gamma * np.log(ratio)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def _calibrate(wm, ratio, target, tol, max_iter):
    lo, hi = 0.0, 1.0
    while _auc_from_weights(_tilted(wm, ratio, hi), wm) < target:
        hi *= 2.0
        if hi > 1e6:
            raise CalibrationFailed(f"target AUC {target} is out of reach for these weights")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        auc = _auc_from_weights(_tilted(wm, ratio, mid), wm)
        if abs(auc - target) <= tol / 10:
            return mid
        if auc < target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(_auc_from_weights(_tilted(wm, ratio, mid), wm) - target) > tol:
        raise CalibrationFailed(f"could not reach AUC {target} within {tol}")
    return mid


def _place_atoms(rng, K, length, j0, jmax, rate):
    """Disjoint atom sets drawn level by level without replacement."""
    sets = [[] for _ in range(K)]
    for j in range(j0, jmax + 1):
        free = list(rng.permutation(np.arange(1 << j, 2 << j)))
        counts = rng.poisson(rate, size=K)
        for k in rng.permutation(K):
            take = min(int(counts[k]), len(free))
            sets[k].extend(int(free.pop()) for _ in range(take))
    # a component without atoms would produce the zero curve; give it one
    pool = np.setdiff1d(np.arange(1 << j0, 2 << jmax), np.concatenate([np.array(s, dtype=int) for s in sets]))
    for k in range(K):
        if not sets[k]:
            if pool.size == 0:
                raise CalibrationFailed("not enough coefficients for one atom per component")
            i = rng.integers(pool.size)
            sets[k].append(int(pool[i]))
            pool = np.delete(pool, i)
    return [np.sort(np.array(s, dtype=np.intp)) for s in sets]


def spec_from_weights(omega_plus, omega_minus, atom_sets=None, *, seed=0, family="Beylkin", length=2048,
                      j0=1, j=None, rate=2.0, sigma=1.0, decay=0.0, p=0.5):
    """Spec with given weights; components are reordered by decreasing ratio."""
    wp = np.asarray(omega_plus, dtype=float)
    wm = np.asarray(omega_minus, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(wm > 0, wp / np.where(wm > 0, wm, 1.0), np.inf)
    order = np.argsort(-ratio, kind="stable")
    L = log2_length(length)
    jmax = L - 1 if j is None else int(j) - 1
    if atom_sets is None:
        atom_sets = _place_atoms(np.random.default_rng(seed), wp.size, length, j0, jmax, rate)
    else:
        atom_sets = [atom_sets[i] for i in order]
    return MixtureSpec(wp[order], wm[order], atom_sets, family_taps(family).name, int(length), int(j0), p,
                       sigma, decay, {"seed": seed, "rate": rate, "j": j})


def build_spec(K=50, target_auc=0.94, seed=0, *, family="Beylkin", length=2048, j0=1, j=None, rate=2.0,
               sigma=1.0, decay=0.0, p=0.5, tol=0.005, max_iter=200):
    """Random mixture whose optimal AUC is ``target_auc`` (within ``tol``).

    Weights: ``w-`` and a base vector ``b`` are Dirichlet(1) draws;
    components are sorted by ``b / w-`` and ``w+`` is the exponential tilt
    ``w+ ∝ w- * (b / w-)**gamma`` with ``gamma`` found by bisection. Any
    ``gamma >= 0`` keeps the likelihood ratios sorted, and the optimal AUC
    grows from 0.5 at ``gamma = 0``.

    Atoms: per level ``j0 .. j-1`` each component draws Poisson(``rate``)
    unused positions of that level.
    """
    if not 0.5 < target_auc < 1.0:
        raise ValueError("target_auc must lie in (0.5, 1)")
    if K < 2:
        raise InvalidCount("need K >= 2 components")
    rng = np.random.default_rng(seed)
    wm = rng.dirichlet(np.ones(K))
    base = rng.dirichlet(np.ones(K))
    ratio = base / wm
    order = np.argsort(-ratio, kind="stable")
    wm, ratio = wm[order], ratio[order]
    gamma = _calibrate(wm, ratio, target_auc, tol, max_iter)
    wp = _tilted(wm, ratio, gamma)
    wp /= wp.sum()
    L = log2_length(length)
    jmax = L - 1 if j is None else int(j) - 1
    if not 0 <= j0 <= jmax <= L - 1:
        raise InvalidScale(f"levels j0={j0}, j={j} incompatible with length {length}")
    atoms = _place_atoms(rng, K, length, j0, jmax, rate)
    meta = {"seed": seed, "target_auc": target_auc, "gamma": gamma, "rate": rate, "j": j}
    return MixtureSpec(wp, wm, atoms, family_taps(family).name, int(length), int(j0), p, sigma, decay, meta)


def sample_oracle(spec, n, seed=0):
    """Labels, 1-based components and optimal scores without building curves.

    Consumes the random stream exactly as :func:`sample` does before the
    amplitudes are drawn, so both agree for the same seed.
    """
    rng = np.random.default_rng(seed)
    return _draw_labels(spec, n, rng)


def _draw_labels(spec, n, rng, components=None):
    if n < 1:
        raise InvalidCount("n must be >= 1")
    pos = rng.random(n) < spec.p
    u = rng.random(n)
    k_pos = np.searchsorted(np.cumsum(spec.omega_plus), u, side="right")
    k_neg = np.searchsorted(np.cumsum(spec.omega_minus), u, side="right")
    comp = np.minimum(np.where(pos, k_pos, k_neg), spec.K - 1) + 1
    if components is not None:
        comp = np.broadcast_to(np.asarray(components, dtype=int), (n,)).copy()
        if comp.min() < 1 or comp.max() > spec.K:
            raise InvalidCount("component out of range")
    labels = np.where(pos, 1, -1)
    return labels, comp, (spec.K - comp + 1).astype(float), rng


def sample(spec, n, seed=0, *, components=None, jitter=1e-9):
    """Draw ``n`` labelled curves.

    The label is +1 with probability ``spec.p``; the component follows
    ``w+`` or ``w-`` accordingly (or is forced through ``components``).
    Each curve is the inverse transform of a coefficient vector supported
    on its component's atoms.

    ``jitter * sigma`` is the std of white noise added to every sample.
    Without it the off-support coefficients are not zero but rounding
    residues whose pattern depends on the component, and tree learners
    happily split on them. The default keeps the off-support energy
    around 1e-16 of the total.
    """
    rng = np.random.default_rng(seed)
    labels, comp, scores, rng = _draw_labels(spec, n, rng, components)
    coef = np.zeros((n, spec.length))
    for k in range(1, spec.K + 1):
        rows = np.flatnonzero(comp == k)
        atoms = spec.atom_sets[k - 1]
        amp = rng.standard_normal((rows.size, atoms.size)) * spec.atom_scales(k)
        coef[np.ix_(rows, atoms)] = amp
    L = log2_length(spec.length)
    curves = dwt_inverse(CoefficientSet(coef, spec.j0, L - 1, spec.family))
    if jitter:
        curves += jitter * spec.sigma * rng.standard_normal(curves.shape)
    meta = {"source": "synth", "seed": seed, "family": spec.family, "j0": spec.j0}
    return LabeledCurveSet(curves, labels, comp, scores, meta)


def power_law_ensemble(n, length=2048, r=1.0, seed=0, *, family="Haar", j0=0):
    """Curves whose level-``j`` coefficients have variance ``2**(-(2r+1) j)``.

    Scaling coefficients have unit variance. Linear approximation with
    ``2**j`` coefficients then leaves a distortion of order ``2**(-2 r j)``.
    """
    L = log2_length(length)
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((n, length))
    for j in range(j0, L):
        coef[:, 1 << j : 2 << j] *= 2.0 ** (-(2 * r + 1) * j / 2.0)
    return dwt_inverse(CoefficientSet(coef, j0, L - 1, family_taps(family).name))


def spike_ensemble(n, k_star, length=256, seed=0, *, shift=1.0, spike_scale=3.0, noise_scale=0.3,
                   family="Haar", j0=0):
    """Curves with ``k_star`` informative atoms on a low-energy background.

    The informative atoms carry the largest second moments; for positives
    their amplitudes are shifted by ``shift * spike_scale``. Every other
    coefficient is pure noise.

    Returns ``(LabeledCurveSet, atom positions)``.
    """
    L = log2_length(length)
    rng = np.random.default_rng(seed)
    atoms = np.sort(rng.choice(np.arange(1, length), size=k_star, replace=False))
    labels = np.where(rng.random(n) < 0.5, 1, -1)
    coef = noise_scale * rng.standard_normal((n, length))
    spikes = spike_scale * (rng.standard_normal((n, k_star)) + shift * (labels[:, None] == 1))
    coef[:, atoms] = spikes
    curves = dwt_inverse(CoefficientSet(coef, j0, L - 1, family_taps(family).name))
    return LabeledCurveSet(curves, labels, meta={"source": "spike", "seed": seed}), atoms
