"""
Generator spectrum and the decay rate
=====================================

For an exponential kernel the memory term closes with one extra field, so
the linear model has an autonomous generator. Its rightmost eigenvalue
predicts the energy decay rate.
"""

# %%
import dataclasses

from timotherm import SimConfig, fit_decay, run
from timotherm import generator as gen

cfg = dataclasses.replace(SimConfig(), n=32)
A = gen.assemble(cfg, mode=gen.EXP_AUGMENTED).reduced()
rep = gen.spectrum(A)
print(f"dimension {A.matrix.shape[0]}, spectral abscissa {rep.abscissa:.6f}")
print("rightmost eigenvalues:")
for ev in rep.eigenvalues[:6]:
    print(f"  {ev.real:+.6f} {ev.imag:+.6f}i")

# %% [markdown]
# Energy is quadratic in the state, so it should decay at twice the
# modulus of the abscissa once the faster modes have died out.

# %%
traj = run(dataclasses.replace(cfg, T=20.0, stride=20))
fit = fit_decay(traj, (10.0, 20.0))
print(f"fitted rate {fit.delta0:.5f}, predicted {2 * abs(rep.abscissa):.5f}")

# %% [markdown]
# Without reduction the spatially constant temperature modes contribute a
# double eigenvalue at zero.

# %%
print("unreduced abscissa:", gen.spectrum(gen.assemble(cfg, mode=gen.EXP_AUGMENTED)).abscissa)
