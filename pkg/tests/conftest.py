import math

import numpy as np
import pytest

from qrcsas import quantum as qm
from qrcsas import sas

TWO_PI = 2 * math.pi


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_unitary(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ry(z):
    """Bloch-space y rotation as displayed for the periodic reservoir."""
    c, s = math.cos(z), math.sin(z)
    return np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]])


def reset_depolarizing(eps=0.5):
    outer = qm.reset_rate(eps, qm.state("0"))
    return sas.extract_sas(qm.compose_family(outer, qm.depolarizing_family()))


def periodic(eps=0.5, gain=1.0, lo=0.0, hi=TWO_PI):
    outer = qm.reset_rate(eps, qm.state("0"))
    return sas.extract_sas(qm.compose_family(outer, qm.rotation_family("y", gain, lo, hi)))


def damped_hadamard(theta=math.pi / 3):
    """Outer channel and unitary encoding whose composition has a constant filter."""
    lam = math.sin(theta) ** 2
    outer = qm.compose(qm.rotation("y", theta), qm.compose(qm.amplitude_damping(lam), qm.hadamard()))
    enc = qm.unitary_family(lambda z: qm.rotation_matrix("z", z[0]) @ qm.HADAMARD, 2, 0.0, TWO_PI)
    return outer, enc


def reset_dephasing(eps=0.5, lam=0.5):
    outer = qm.reset_rate(eps, qm.state("+"))
    rot = qm.unitary_family(lambda v: qm.rotation_matrix("x", v[0]), 2, 0.0, TWO_PI)
    enc = qm.compose_family(qm.dephasing(lam), rot)
    return outer, enc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
