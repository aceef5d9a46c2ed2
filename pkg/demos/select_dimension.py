"""
Choosing the number of coefficients
===================================

Training AUC grows with the number N of coefficients the tree may use;
the complexity penalty grows too. The selected N maximizes their
difference.
"""
from ftreerank import modelselect, synth

data, atoms = synth.spike_ensemble(400, 8, 256, seed=0)
print("informative atoms", atoms.tolist())

for c_v in (1.0, 0.01):
    report = modelselect.select_dimension(data, [2, 4, 8, 16, 32], modelselect.PenaltySchedule(c_v),
                                          family="Haar", j0=0)
    print(f"c_v = {c_v}")
    print(report.to_csv())

# at this sample size the penalty is large
for N in (1, 4, 8, 32):
    print(N, round(modelselect.penalty(N, 400), 3))
