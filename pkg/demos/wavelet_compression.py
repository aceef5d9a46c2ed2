"""
Keeping a few wavelet coefficients
==================================

Curves whose detail coefficients shrink geometrically with the scale are
well summarized by their coarse coefficients. Here we compare keeping the
first 2**j coefficients (linear) with keeping the 2**j coefficients of
largest second moment over the ensemble (nonlinear).
"""
import numpy as np

from ftreerank import dwt_forward, synth
from ftreerank.filtering import distortion, linear_index_set, top_variance_index_set

# 200 curves of length 2048, level-j variance 2**(-3j)
X = synth.power_law_ensemble(200, length=2048, r=1.0, seed=0, family="Haar")
coeffs = dwt_forward(X, "Haar", 0)

# the transform is orthonormal: energy is preserved
print("energy ratio", np.sum(coeffs.values ** 2) / np.sum(X ** 2))

print(" N   linear     top-variance")
Ns, D = [], []
for j in range(3, 10):
    lin = np.mean(distortion(X, linear_index_set(j, 0), "Haar"))
    top = np.mean(distortion(X, top_variance_index_set(coeffs, 2 ** j), "Haar"))
    print(f"{2 ** j:4d}  {lin:.3e}  {top:.3e}")
    Ns.append(2 ** j)
    D.append(top)

# the distortion falls like N**-2 for this smoothness
print("log-log slope", np.polyfit(np.log(Ns), np.log(D), 1)[0])

# spiky curves are where the nonlinear choice pays off
spec = synth.build_spec(10, 0.8, seed=5, family="Daubechies4", length=256, j0=2, rate=1.5)
S = synth.sample(spec, 200, seed=1).curves
c = dwt_forward(S, "Daubechies4", 2)
for N in (8, 32):
    lin = np.mean(distortion(S, linear_index_set(int(np.log2(N)), 2), "Daubechies4"))
    top = np.mean(distortion(S, top_variance_index_set(c, N), "Daubechies4"))
    print(f"spikes, N={N}: linear {lin:.2f}  top-variance {top:.2f}")
