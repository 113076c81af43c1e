"""
Gain and loss suppress entanglement
===================================

Start from the product state |0,0> and follow the linear entropy of one
rotor for several non-Hermitian strengths.  Stronger lambda pins the state
near p = 0 and keeps the rotors nearly unentangled.
"""

import numpy as np

import nhrotor as nr

grid = nr.make_grid(512, 0.06)
steps = 6
lambdas = [0.0, 0.05, 0.1, 2.0]

results = {}
for lam in lambdas:
    params = nr.SystemParams.symmetric(5.0, lam, 0.3, grid.hbar)
    obs = [nr.Observer("S", nr.state_linear_entropy)]
    traj = nr.evolve(nr.ground_product_state(grid), steps, nr.build_propagator(params, grid), obs)
    results[lam] = traj.series("S")[1]
    print(f"lambda={lam:<5} S(t) =", np.array2string(results[lam], precision=3),
          "" if traj.completed else f"(stopped: {traj.abort_reason})")

# the largest reduced-density eigenvalue is nearly one when lambda is large
params = nr.SystemParams.symmetric(5.0, 2.0, 0.3, grid.hbar)
state = nr.evolve(nr.ground_product_state(grid), steps, nr.build_propagator(params, grid)).state
spec = nr.rho_spectrum(nr.reduced_density(state, support_tol=1e-20))
print("lambda=2.0 leading Schmidt weights:", np.array2string(spec.xi[:4], precision=6))
