"""
Mixtures with a known optimal ROC curve
=======================================

Each component of the mixture lives on its own set of wavelet atoms, so
the component of a curve is identifiable and the optimal score only
depends on it. The optimal ROC curve joins the cumulated weights.
"""
import numpy as np

from ftreerank import dwt_forward, empirical_auc, synth

for target in (0.94, 0.71):
    spec = synth.build_spec(50, target, seed=0)
    labels, comp, scores, _ = synth.sample_oracle(spec, 10_000, seed=1)
    print(f"target {target}: optimal AUC {synth.optimal_auc(spec):.4f}, "
          f"oracle on 10000 draws {empirical_auc(scores, labels):.4f}")

roc = synth.optimal_roc(spec)
print("first knots", [(round(a, 3), round(b, 3)) for a, b in roc.points[:4]])

# a curve drawn from component 3 has its energy on that component's atoms
d = synth.sample(spec, 1, seed=2, components=3)
c = dwt_forward(d.curves[0], spec.family, spec.j0).values
atoms = spec.atom_sets[2]
print("atoms", atoms.tolist())
print("energy on atoms", np.sum(c[atoms] ** 2) / np.sum(c ** 2))
