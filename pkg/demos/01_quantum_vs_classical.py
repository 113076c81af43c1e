"""
Quantum and classical energy growth of two coupled kicked rotors
================================================================

Hermitian kicks (lambda = 0).  For a few kicks the quantum <p1^2> follows
the classical ensemble, both growing at roughly K^2/2 per kick.

Runs in a few seconds on a 1024 x 1024 momentum grid; longer runs need
the larger grids of the presets (``nhrotor preset fig1a_lambda0``).
"""

import numpy as np

import nhrotor as nr
from nhrotor.analysis import fit_linear_diffusion
from nhrotor.classical import ensemble_p1_squared, sample_ensemble

# %% parameters
params = nr.SystemParams.symmetric(K=5.0, lam=0.0, eps=0.3, hbar=0.06)
grid = nr.make_grid(512, params.hbar)
steps = 5

# %% quantum evolution from |0,0>
prop = nr.build_propagator(params, grid)
obs = [nr.Observer("p1_sq", nr.mean_p1_squared), nr.Observer("edge", nr.boundary_mass)]
traj = nr.evolve(nr.ground_product_state(grid), steps, prop, obs)
t, quantum = traj.series("p1_sq")
print("aliasing guard:", "ok" if traj.completed else traj.abort_reason)

# %% classical ensemble: uniform angles, zero momenta
ens = sample_ensemble(20_000, seed=7, params=params)
classical = ensemble_p1_squared(ens, steps)

print(f"{'t':>3} {'quantum':>10} {'classical':>10}")
for k in t:
    print(f"{k:>3} {quantum[k]:10.3f} {classical[k]:10.3f}")

# %% diffusion rates over the whole run
Dq = fit_linear_diffusion(t, quantum, window=(1, steps)).value
Dc = fit_linear_diffusion(t, classical, window=(1, steps)).value
print(f"D quantum {Dq:.2f}, classical {Dc:.2f}, K^2/2 = {params.K1**2 / 2:.2f}")
