# %% [markdown]
# # Reservoirs that forget their input entirely
#
# A reservoir built as a contracting channel after an input encoding can
# still output the same state whatever it is fed. The filter is constant
# exactly when the fixed point under constant input does not depend on
# the input value. Two such constructions are checked here.

# %%
import math

import numpy as np

from qrcsas import injectivity as inj
from qrcsas import quantum as qm
from qrcsas import sas

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# First: encode with ``Rz(v) H``, then apply a Hadamard, amplitude damping
# with rate ``sin(theta)^2`` and a y rotation by ``theta``.

# %%
theta = math.pi / 3
outer = qm.compose(qm.rotation("y", theta), qm.compose(qm.amplitude_damping(math.sin(theta) ** 2), qm.hadamard()))
encoding = qm.unitary_family(lambda v: qm.rotation_matrix("z", v[0]) @ qm.HADAMARD, 2, 0.0, 2 * math.pi)
rep = inj.constant_filter_check(qm.compose_family(outer, encoding), split=inj.ContractedEncoding(outer, encoding))
print("verdict:", rep.verdict, "| fixed-point spread:", rep.deviation, "| trajectory spread:", rep.collapse_spread)
print("rho_T =\n", rep.rho_T.real)
print("rho' =\n", rep.rho_prime.real)
print("rho_E =\n", rep.rho_E.real)

# %% [markdown]
# The outer channel's own fixed state is moved by the encoding, so the
# simple commuting criterion fails while the filter is still constant.

# %%
grid = np.linspace(0, 2 * math.pi, 101)
print(inj.fixed_state_invariance_check(outer, encoding, grid))

# %% [markdown]
# Second: dephase, rotate about x, then reset towards ``|+><+|`` at rate 1/2.

# %%
outer = qm.reset_rate(0.5, qm.state("+"))
encoding = qm.compose_family(qm.dephasing(0.5), qm.unitary_family(lambda v: qm.rotation_matrix("x", v[0]), 2, 0.0, 2 * math.pi))
rep = inj.constant_filter_check(qm.compose_family(outer, encoding), split=inj.ContractedEncoding(outer, encoding))
print("verdict:", rep.verdict)
print("rho_T =\n", rep.rho_T.real, "\nrho' =\n", rep.rho_prime.real, "\nrho_E =\n", rep.rho_E.real)

# %% [markdown]
# For contrast, the damped driven qubit is input dependent.

# %%
lind = sas.extract_sas(qm.lindblad_family(qm.LindbladModel(1.0)))
print("damped driven qubit:", inj.constant_filter_check(lind).verdict)
