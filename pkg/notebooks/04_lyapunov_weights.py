"""
Weights of the Lyapunov functional
==================================

Search a coarse grid for weights that satisfy all six sign conditions,
then compare L = N E + sum N_i I_i with E along a trajectory.
"""

# %%
import dataclasses

import numpy as np

from timotherm import SimConfig, run
from timotherm import diagnostics as diag

cfg = SimConfig()
times = np.linspace(0.0, cfg.T, 501)
weights = diag.find_feasible_weights(cfg.kernel, cfg.friction, times)
print(weights)
print("margins at t = 0:", np.round(diag.weight_margins(weights, cfg.kernel, cfg.friction, 0.0), 4))

# %%
traj = run(dataclasses.replace(cfg, n=32, weights=weights, stride=25))
eq = diag.equivalence_ratios(traj)
print(f"{eq.c1:.4f} E <= L <= {eq.c2:.4f} E along the run")
