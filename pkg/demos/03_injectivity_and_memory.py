# %% [markdown]
# # Telling inputs apart
#
# A reservoir is useful only if distinct input histories lead to distinct
# states. Locally this is a rank condition on the input derivative of the
# state map. Globally it can fail through periodicity of the encoding,
# and that failure shows up directly as lost memory.

# %%
import math

import numpy as np

from qrcsas import injectivity as inj
from qrcsas import quantum as qm
from qrcsas import sas
from qrcsas import tasks

np.set_printoptions(precision=4, suppress=True)
reset = qm.reset_rate(0.5, qm.state("0"))

# %% [markdown]
# Depolarizing with strength ``z`` before the reset: the rank condition
# holds at every sampled reachable state.

# %%
dep = sas.extract_sas(qm.compose_family(reset, qm.depolarizing_family()))
xs = inj.reachable_sample(dep, 40, seed=0)
scan = inj.global_injectivity_scan(dep, sas.domain_grid(0, 1, 51), xs)
print(scan.verdict, "| smallest singular value:", round(scan.min_singular_value, 4))

# %% [markdown]
# A y rotation by ``2 pi z`` on ``[0, 1]`` cannot separate ``z = 0`` from
# ``z = 1``. A shifted pair of sequences produces identical outputs.

# %%
per = sas.extract_sas(qm.compose_family(reset, qm.rotation_family("y", 2 * math.pi, 0.0, 1.0)))
res = inj.counterexample_search(per, inj.shifted_pairs(0, 1, 1.0), tol_in=0.5)
print("witness found:", res.found, "| input gap:", res.input_gap, "| output gap:", res.output_gap)

# %% [markdown]
# With gain 1 on ``[0, 2 pi]`` the constant-input fixed point of ``z = 0``
# is also reached at ``z = 2 pi`` and nowhere else.

# %%
per2 = sas.extract_sas(qm.compose_family(reset, qm.rotation_family("y")))
pre = inj.preimage_constant_output(per2, sas.fixed_point(per2, 0.0), sas.domain_grid(0, 2 * math.pi, 101))
print("preimage clusters:", pre.representatives.ravel(), "| sequence deviation:", pre.sequence_deviation)

# %% [markdown]
# Rank-condition norm of the damped driven qubit over a small grid. It
# dips near ``gamma^2 = 16 z^2``.

# %%
f1 = inj.fig1_scan(np.linspace(0.25, 2, 8), np.linspace(-1, 1, 9))
print(f1.norm)

# %% [markdown]
# One-step memory capacity of the reset-plus-rotation reservoir as the
# input gain grows. At gain ``2 pi`` inputs 0 and 1 coincide and the
# capacity collapses.

# %%
cfg = tasks.TaskConfig().fast()
for g in [0.25, 1.0, 2.0, 4.0, 2 * math.pi]:
    r = tasks.stm_task(0.2, g, cfg)
    print(f"g = {g:6.3f}: C = {r.mean:.4f} +/- {r.std:.4f}")
