# %% [markdown]
# # Channels as affine maps on Bloch vectors
#
# Any trace-preserving map on qubit density matrices acts on the Bloch
# vector as ``x -> p x + q``. This script builds a few channels, extracts
# ``p`` and ``q`` and checks the representation against direct application.

# %%
import math

import numpy as np

from qrcsas import quantum as qm
from qrcsas import sas

np.set_printoptions(precision=4, suppress=True)
basis = sas.gell_mann_basis(2)

# %% [markdown]
# A reset towards ``|0><0|`` at rate 0.3 shrinks the ball uniformly and
# shifts it along the third axis.

# %%
reset = qm.reset_rate(0.3, qm.state("0"))
t = sas.extract_superop(reset, basis)
print("block of the reset channel\n", t)
p, q = sas.split_superop(t, 2)
print("p =\n", p, "\nq =", q)

# %% [markdown]
# An input-driven y rotation gives an orthogonal ``p(z)`` and no offset.

# %%
rot = sas.extract_sas(qm.rotation_family("y"))
for z in [0.0, math.pi / 2, math.pi]:
    print(f"z = {z:.3f}\n", rot.p(z))

# %% [markdown]
# Composing the two yields a contracting reservoir. Driving it from two
# different initial states shows the initial condition being forgotten.

# %%
reservoir = sas.extract_sas(qm.compose_family(reset, qm.rotation_family("y", 1.0, 0.0, 2 * math.pi)))
print("ESP:", reservoir.esp.verdict, "max ||p|| =", round(reservoir.esp.max_norm, 6))
inputs = np.random.default_rng(0).uniform(0, 2 * math.pi, 60)
a = sas.filter_eval(reservoir, inputs)
b = sas.filter_eval(reservoir, inputs, x0=np.array([0.5, -0.2, 0.1]))
print("gap after 1, 20, 60 steps:", [float(np.linalg.norm(a[k] - b[k])) for k in (0, 19, 59)])

# %% [markdown]
# The affine model agrees with applying the channel to density matrices.

# %%
fam = qm.compose_family(reset, qm.rotation_family("y"))
rng = np.random.default_rng(1)
zs = rng.uniform(0, 2 * math.pi, (50, 1))
rhos = [qm.random_density(2, rng) for _ in zs]
print("max affine defect:", sas.affine_defect(sas.extract_sas(fam), fam, zs, rhos))

# %% [markdown]
# The damped driven qubit has a closed-form steady state. The unique fixed
# point of the affine map reproduces it.

# %%
model = qm.LindbladModel(gamma=1.0)
lind = sas.extract_sas(qm.lindblad_family(model))
for z in [0.25, 0.5, 1.0]:
    x = sas.fixed_point(lind, z)
    ref = np.array([0.0, -2 * z, -1.0]) / (2 * z * z + 1) / math.sqrt(2)
    print(f"z={z}: fixed point {x}, closed form {ref}")
