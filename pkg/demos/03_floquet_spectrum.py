"""
Complex quasienergies and the dominant quasieigenstate
======================================================

On a tiny grid the one-period operator U can be diagonalized outright.
Eigenvalues mu = exp(-i (eps_r + i eps_i)); the state with the largest
eps_i outgrows the rest, so any initial state converges onto it.
"""

import numpy as np

import nhrotor as nr
from nhrotor.spectral import build_floquet_matrix, dominant_from_params, eig_full

params = nr.SystemParams.symmetric(5.0, 2.0, 0.3, 0.06)
grid = nr.make_grid(8, params.hbar)          # 16 x 16 sites, U is 256 x 256

fm = build_floquet_matrix(params, grid)
pairs = eig_full(fm)
print("bound (lambda1 + lambda2)/hbar =", round(params.log_gain_max, 3))
for q in pairs[:5]:
    print(f"eps_r={q.eps_r:+.4f}  eps_i={q.eps_i:.4f}")

# power iteration on the split-operator action never builds U
top = dominant_from_params(params, grid)
print("power iteration eps_i:", round(top.eps_i, 6))

# fidelity of the evolved |0,0> with the dominant state
obs = [nr.Observer("F", lambda s: nr.fidelity(top.vector, s))]
traj = nr.evolve(nr.ground_product_state(grid), 20, nr.build_propagator(params, grid), obs,
                 alias_tol=None)   # fixed small grid: truncation is the point here
t, F = traj.series("F")
print("F(t):", np.array2string(F[::4], precision=6))
