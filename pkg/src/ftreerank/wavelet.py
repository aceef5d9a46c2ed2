"""Periodized orthonormal discrete wavelet transform.

Coefficients of a length ``2**L`` signal are stored in a single flat array
using the usual pyramid layout::

    [alpha_{j0,0..2^j0-1} | beta_{j0,.} | beta_{j0+1,.} | ... | beta_{L-1,.}]

so the detail block of level ``j`` starts at offset ``2**j``. The scaling
coefficients are addressed as level ``j0 - 1`` (they take the place of the
missing coarser details), which makes ``(j, k) -> flat`` a one-liner and
keeps lexicographic ``(j, k)`` order identical to flat order.

All routines act on the last axis, so a batch of curves of shape
``(m, n)`` (or ``(m, sensors, n)``) is transformed in one call.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCoefficients, InvalidLength, InvalidScale, UnknownFamily

__all__ = [
    "WaveletFamily",
    "CoefficientSet",
    "family_taps",
    "family_names",
    "dwt_forward",
    "dwt_inverse",
    "flat_index",
    "level_of",
    "log2_length",
]


# Lowpass (synthesis) taps, sum = sqrt(2).
# Daubechies / Coiflet / Symmlet values are the standard double-precision
# tables (identical to those shipped with PyWavelets under db2, db6, db10,
# coif2 and sym10). Beylkin is the 18-tap filter distributed with WaveLab;
# it is published to 12 digits and renormalized to unit energy below.
_TAPS = {
    "Haar": [0.7071067811865476, 0.7071067811865476],
    "Daubechies4": [
        0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
        -0.12940952255126037,
    ],
    "Daubechies12": [
        0.11154074335010947, 0.49462389039845306, 0.7511339080210954,
        0.31525035170919763, -0.22626469396543983, -0.12976686756726194,
        0.09750160558732304, 0.027522865530305727, -0.03158203931748603,
        0.0005538422011614961, 0.004777257510945511, -0.0010773010853084796,
    ],
    "Daubechies20": [
        0.026670057900555554, 0.1881768000776915, 0.5272011889317256,
        0.6884590394536035, 0.2811723436605775, -0.24984642432731538,
        -0.19594627437737705, 0.12736934033579325, 0.09305736460357235,
        -0.07139414716639708, -0.029457536821875813, 0.033212674059341,
        0.0036065535669561697, -0.010733175483330575, 0.001395351747052901,
        0.001992405295185056, -0.0006858566949597116, -0.00011646685512928545,
        9.358867032006959e-05, -1.3264202894521244e-05,
    ],
    "Coiflet2": [
        0.01638733646320364, -0.04146493678687178, -0.0673725547237256,
        0.3861100668227629, 0.8127236354494135, 0.4170051844232391,
        -0.07648859907828076, -0.05943441864643109, 0.02368017194684777,
        0.005611434819368834, -0.0018232088709110323, -0.000720549445520347,
    ],
    "Symmlet10": [
        -0.0004593294210046588, 5.7036083618494284e-05, 0.004593173585311828,
        -0.0008043589320165449, -0.02035493981231129, 0.005764912033581909,
        0.04999497207737669, -0.0319900568824278, -0.03553674047381755,
        0.38382676106708546, 0.7695100370211071, 0.47169066693843925,
        -0.07088053578324385, -0.15949427888491757, 0.011609893903711381,
        0.0459272392310922, -0.0014653825813050513, -0.008641299277022422,
        9.563267072289475e-05, 0.0007701598091144901,
    ],
    "Beylkin": [
        0.099305765374, 0.424215360813, 0.699825214057, 0.449718251149,
        -0.110927598348, -0.264497231446, 0.026900308804, 0.155538731877,
        -0.017520746267, -0.088543630623, 0.019679866044, 0.042916387274,
        -0.017460408696, -0.014365807969, 0.010040411845, 0.001484234782,
        -0.002736031626, 0.000640485329,
    ],
}

_VANISHING_MOMENTS = {
    "Haar": 1,
    "Daubechies4": 2,
    "Daubechies12": 6,
    "Daubechies20": 10,
    "Coiflet2": 4,
    "Symmlet10": 10,
    "Beylkin": 3,
}

_ALIASES = {
    "haar": "Haar",
    "db1": "Haar",
    "daubechies4": "Daubechies4",
    "db2": "Daubechies4",
    "daubechies12": "Daubechies12",
    "db6": "Daubechies12",
    "daubechies20": "Daubechies20",
    "db10": "Daubechies20",
    "coiflet2": "Coiflet2",
    "coif2": "Coiflet2",
    "symmlet10": "Symmlet10",
    "sym10": "Symmlet10",
    "beylkin": "Beylkin",
}


@dataclass(frozen=True, eq=False)
class WaveletFamily:
    """An orthonormal two-channel filter pair.

    ``lowpass`` holds the scaling filter h; the wavelet filter is the
    quadrature mirror ``g[m] = (-1)**m * h[L-1-m]``.
    """

    name: str
    lowpass: np.ndarray
    vanishing_moments: int

    @property
    def highpass(self):
        h = self.lowpass
        return ((-1.0) ** np.arange(h.size)) * h[::-1]

    def __len__(self):
        return self.lowpass.size

    def __repr__(self):
        return f"WaveletFamily({self.name!r}, taps={self.lowpass.size})"


_REGISTRY = {}


def family_names():
    return list(_TAPS)


def family_taps(name):
    """Return the registered :class:`WaveletFamily` called ``name``.

    Accepts the canonical names (``"Daubechies12"``) as well as the usual
    short aliases (``"db6"``), case-insensitively. Passing a
    :class:`WaveletFamily` returns it unchanged.
    """
    if isinstance(name, WaveletFamily):
        return name
    canonical = _ALIASES.get(str(name).lower())
    if canonical is None:
        raise UnknownFamily(f"unknown wavelet family {name!r}; known: {family_names()}")
    fam = _REGISTRY.get(canonical)
    if fam is None:
        h = np.asarray(_TAPS[canonical], dtype=float)
        h = h / np.linalg.norm(h)
        h.setflags(write=False)
        fam = WaveletFamily(canonical, h, _VANISHING_MOMENTS[canonical])
        _REGISTRY[canonical] = fam
    return fam


def log2_length(n):
    """Return L with ``n == 2**L``; raise :class:`InvalidLength` otherwise."""
    n = int(n)
    if n < 2 or n & (n - 1):
        raise InvalidLength(f"signal length must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


def flat_index(j, k, j0):
    """Flat position of coefficient ``(j, k)``; level ``j0 - 1`` is the scaling block."""
    if j == j0 - 1:
        return k
    return (1 << j) + k


def level_of(pos, j0):
    """Inverse of :func:`flat_index`: ``(j, k)`` for a flat position."""
    pos = int(pos)
    if pos < (1 << j0):
        return j0 - 1, pos
    j = pos.bit_length() - 1
    return j, pos - (1 << j)


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Wavelet coefficients of one curve or of a batch of curves.

    ``values[..., :]`` follows the flat pyramid layout described in the
    module docstring. ``family`` records the analysing filter name.
    """

    values: np.ndarray
    j0: int
    jmax: int
    family: str = ""

    @property
    def length(self):
        return self.values.shape[-1]

    @property
    def alpha(self):
        return self.values[..., : 1 << self.j0]

    def beta(self, j):
        if not self.j0 - 1 <= j <= self.jmax:
            raise InvalidScale(f"level {j} outside [{self.j0 - 1}, {self.jmax}]")
        if j == self.j0 - 1:
            return self.alpha
        return self.values[..., 1 << j : 2 << j]

    def get(self, j, k):
        if not 0 <= k < (1 << max(j, self.j0)):
            raise InvalidScale(f"position {k} out of range for level {j}")
        return self.beta(j)[..., k]

    def with_values(self, values):
        return CoefficientSet(np.asarray(values, dtype=float), self.j0, self.jmax, self.family)

    def energy(self):
        return np.sum(self.values ** 2, axis=-1)


def _periodic_index(n, m):
    return (2 * np.arange(n // 2) + m) % n


def _analysis_step(a, h, g):
    n = a.shape[-1]
    lo = np.zeros(a.shape[:-1] + (n // 2,))
    hi = np.zeros_like(lo)
    for m in range(h.size):
        x = a[..., _periodic_index(n, m)]
        lo += h[m] * x
        hi += g[m] * x
    return lo, hi


def _synthesis_step(lo, hi, h, g):
    n = 2 * lo.shape[-1]
    out = np.zeros(lo.shape[:-1] + (n,))
    for m in range(h.size):
        # for fixed m the targets 2k+m (mod n) are distinct, so += is safe
        out[..., _periodic_index(n, m)] += h[m] * lo + g[m] * hi
    return out


def dwt_forward(curve, family="Haar", j0=0):
    """Periodized orthonormal DWT down to coarsest level ``j0``.

    Parameters
    ----------
    curve : array_like, shape (..., n)
        Samples; ``n`` must be a power of two. Leading axes are batch axes.
    family : str or WaveletFamily
    j0 : int
        Coarsest level, ``0 <= j0 <= log2(n) - 1``.

    Returns
    -------
    CoefficientSet
        With ``jmax = log2(n) - 1``. The transform is orthogonal, so
        ``sum(values**2) == sum(curve**2)``.
    """
    x = np.asarray(curve, dtype=float)
    if x.ndim == 0:
        raise InvalidLength("curve must have at least one axis")
    L = log2_length(x.shape[-1])
    if not isinstance(j0, (int, np.integer)) or not 0 <= j0 <= L - 1:
        raise InvalidScale(f"j0 must lie in [0, {L - 1}], got {j0}")
    if not np.all(np.isfinite(x)):
        raise InvalidLength("curve contains non-finite samples")
    fam = family_taps(family)
    h, g = fam.lowpass, fam.highpass
    out = np.empty(x.shape)
    a = x
    for j in range(L - 1, j0 - 1, -1):
        a, d = _analysis_step(a, h, g)
        out[..., 1 << j : 2 << j] = d
    out[..., : 1 << j0] = a
    return CoefficientSet(out, int(j0), L - 1, fam.name)


def dwt_inverse(coeffs, family=None):
    """Invert :func:`dwt_forward`.

    ``family`` defaults to the one recorded in ``coeffs``.
    """
    if not isinstance(coeffs, CoefficientSet):
        raise InvalidCoefficients("expected a CoefficientSet")
    v = np.asarray(coeffs.values, dtype=float)
    try:
        L = log2_length(v.shape[-1])
    except InvalidLength as exc:
        raise InvalidCoefficients(str(exc)) from None
    if coeffs.jmax != L - 1 or not 0 <= coeffs.j0 <= coeffs.jmax:
        raise InvalidCoefficients(
            f"index ranges j0={coeffs.j0}, jmax={coeffs.jmax} do not match length {v.shape[-1]}"
        )
    fam = family_taps(family if family is not None else (coeffs.family or "Haar"))
    h, g = fam.lowpass, fam.highpass
    a = v[..., : 1 << coeffs.j0]
    for j in range(coeffs.j0, L):
        a = _synthesis_step(a, v[..., 1 << j : 2 << j], h, g)
    return a
