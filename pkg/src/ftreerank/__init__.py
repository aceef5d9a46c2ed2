"""Bipartite ranking of labelled curves with wavelet-filtered ranking trees.

Modules
-------
wavelet      periodized orthonormal DWT and filter families
filtering    coefficient selection (linear, top-variance, thresholding)
metrics      exact AUC and ROC curves
leafrank     cost-sensitive classification trees
treerank     ranking trees, functional variant, pruning
modelselect  penalized choice of the filter dimension
synth        mixtures with known optimal ROC
harness      experiment configs, protocols, reports
"""
from .errors import *  # noqa: F401,F403
from .filtering import (
    FilterIndexSet,
    apply_filter,
    distortion,
    linear_index_set,
    threshold_index_set,
    top_variance_index_set,
)
from .metrics import RocCurve, empirical_auc, roc_curve, roc_envelope
from .treerank import LabeledCurveSet, RankingTree, grow_filtered, grow_functional, grow_standard, prune, score_tree
from .wavelet import CoefficientSet, dwt_forward, dwt_inverse, family_names, family_taps

__version__ = "0.1.0"
