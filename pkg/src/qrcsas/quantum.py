"""Density matrices, channels and parameterized channel families.

A :class:`Channel` is stored as its superoperator in the column-stacking
convention, ``vec(A rho B) = (B^T kron A) vec(rho)`` with
``vec(X) = X.reshape(-1, order="F")``. Kraus operators are kept alongside
when the channel was built from them. Two channels are equal when their
superoperators agree; Kraus decompositions are not unique.

Qubit conventions: ``|0> = (1, 0)``, Pauli matrices in their usual form,
rotations ``exp(-i angle sigma / 2)`` and the lowering operator
``sigma_minus = (sigma_x - i sigma_y) / 2 = |1><0|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import ShapeError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

DENSITY_TOL = 1e-10
CPTP_TOL = 1e-9


def vec(x):
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, d):
    return np.asarray(v).reshape((d, d), order="F")


def _dim_from_superop(s):
    d = int(round(np.sqrt(s.shape[0])))
    if s.ndim != 2 or s.shape[0] != s.shape[1] or d * d != s.shape[0]:
        raise ShapeError(f"superoperator must be d^2 x d^2, got {s.shape}")
    return d


@dataclass(frozen=True, eq=False)
class Channel:
    """Linear map on d x d matrices.

    Nothing is enforced at construction so that non-physical maps (inverse
    channels, the transpose) can be represented and then rejected by
    :func:`validate_cptp`.
    """

    superop: np.ndarray
    kraus: Optional[tuple] = None

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        _dim_from_superop(s)
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    @classmethod
    def from_kraus(cls, ops):
        ops = tuple(np.asarray(k, dtype=complex) for k in ops)
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ShapeError("Kraus operators must all be d x d")
        s = sum(np.kron(k.conj(), k) for k in ops)
        return cls(s, ops)

    @property
    def d(self):
        return _dim_from_superop(self.superop)

    def __call__(self, rho):
        return apply(self, rho)

    def __matmul__(self, other):
        return compose(self, other)


def apply(ch, rho):
    """Apply a channel to a d x d matrix."""
    rho = np.asarray(rho)
    d = ch.d
    if rho.shape != (d, d):
        raise ShapeError(f"channel acts on {d}x{d} matrices, got {rho.shape}")
    return unvec(ch.superop @ vec(rho), d)


def compose(outer, inner):
    """Channel ``rho -> outer(inner(rho))``."""
    if outer.d != inner.d:
        raise ShapeError(f"dimension mismatch: {outer.d} vs {inner.d}")
    kraus = None
    if outer.kraus is not None and inner.kraus is not None:
        kraus = tuple(a @ b for a in outer.kraus for b in inner.kraus)
    return Channel(outer.superop @ inner.superop, kraus)


def channels_equal(a, b, tol=1e-10):
    """Behavioural equality: superoperators agree entrywise."""
    return a.d == b.d and float(np.max(np.abs(a.superop - b.superop))) < tol


def choi_matrix(ch):
    """Choi matrix ``sum_ij |i><j| kron T(|i><j|)``."""
    d = ch.d
    s = ch.superop
    c = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            c[i * d : (i + 1) * d, j * d : (j + 1) * d] = unvec(s[:, i + j * d], d)
    return c


@dataclass(frozen=True)
class CptpReport:
    trace_defect: float
    min_choi_eig: float
    hermiticity_defect: float
    passed: bool


def validate_cptp(ch, tol=CPTP_TOL):
    """Check trace preservation and complete positivity of a linear map."""
    d = ch.d
    ident = vec(np.eye(d))
    trace_defect = float(np.max(np.abs(ident @ ch.superop - ident)))
    c = choi_matrix(ch)
    herm = float(np.max(np.abs(c - c.conj().T)))
    evals, _ = linalg.hermitian_eigen(0.5 * (c + c.conj().T))
    min_eig = float(evals[0])
    passed = trace_defect < tol and min_eig > -tol and herm < tol
    return CptpReport(trace_defect, min_eig, herm, passed)


# ---------------------------------------------------------------- states


def check_density(rho, tol=DENSITY_TOL):
    """Raise ``ValueError`` unless ``rho`` is a density matrix within ``tol``."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.12g}")
    evals, _ = linalg.hermitian_eigen(rho)
    if evals[0] < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    return rho


def is_density(rho, tol=DENSITY_TOL):
    try:
        check_density(rho, tol)
    except ValueError:
        return False
    return True


def state(name, d=2):
    """Named qubit states: ``"0"``, ``"1"``, ``"+"``, ``"-"``, ``"+i"``, ``"-i"``, ``"mixed"``."""
    if name == "mixed":
        return np.eye(d, dtype=complex) / d
    if d != 2:
        raise ValueError("named pure states are defined for qubits only")
    kets = {
        "0": [1, 0],
        "1": [0, 1],
        "+": [1, 1],
        "-": [1, -1],
        "+i": [1, 1j],
        "-i": [1, -1j],
    }
    if name not in kets:
        raise ValueError(f"unknown state {name!r}")
    k = np.array(kets[name], dtype=complex)
    k /= np.linalg.norm(k)
    return np.outer(k, k.conj())


def random_density(d, seed=None):
    """Ginibre-distributed density matrix ``G G^H / tr(G G^H)``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


# ------------------------------------------------------------------ zoo


def _check_unit_interval(name, value, upper_open=False):
    if not (0.0 <= value <= 1.0) or (upper_open and value >= 1.0):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise ValueError(f"{name} must lie in {bound}, got {value}")


def identity_channel(d=2):
    return Channel(np.eye(d * d, dtype=complex), (np.eye(d, dtype=complex),))


def amplitude_damping(lam):
    """Qubit amplitude damping towards ``|0>``.

    ``rho -> [[rho00 + lam rho11, sqrt(1-lam) rho01], [sqrt(1-lam) rho10, (1-lam) rho11]]``
    """
    _check_unit_interval("lambda", lam)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - lam)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(lam)], [0, 0]], dtype=complex)
    return Channel.from_kraus([k0, k1])


def dephasing(lam):
    """Qubit dephasing: off-diagonal entries are multiplied by ``lam``."""
    _check_unit_interval("lambda", lam)
    k0 = np.sqrt((1 + lam) / 2) * np.eye(2, dtype=complex)
    k1 = np.sqrt((1 - lam) / 2) * SIGMA_Z
    return Channel.from_kraus([k0, k1])


def depolarizing_input(z, d=2):
    """``A -> z A + (1 - z) tr(A) I / d``."""
    _check_unit_interval("z", z)
    ident = vec(np.eye(d, dtype=complex))
    s = z * np.eye(d * d, dtype=complex) + (1 - z) / d * np.outer(ident, ident)
    return Channel(s)


def reset_rate(eps, sigma):
    """``A -> (1 - eps) A + eps tr(A) sigma``; strictly contractive for ``eps > 0``."""
    _check_unit_interval("epsilon", eps, upper_open=True)
    sigma = check_density(sigma)
    d = sigma.shape[0]
    ident = vec(np.eye(d, dtype=complex))
    s = (1 - eps) * np.eye(d * d, dtype=complex) + eps * np.outer(vec(sigma), ident)
    return Channel(s)


def reset_rate_inverse(eps, sigma):
    """Linear inverse ``A -> (A - eps tr(A) sigma) / (1 - eps)``; not a channel in general."""
    _check_unit_interval("epsilon", eps, upper_open=True)
    sigma = np.asarray(sigma, dtype=complex)
    d = sigma.shape[0]
    ident = vec(np.eye(d, dtype=complex))
    s = (np.eye(d * d, dtype=complex) - eps * np.outer(vec(sigma), ident)) / (1 - eps)
    return Channel(s)


def unitary(u, tol=1e-10):
    """Conjugation channel ``rho -> U rho U^H``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeError(f"unitary must be square, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > tol:
        raise ValueError("matrix is not unitary within tolerance")
    return Channel.from_kraus([u])


def rotation_matrix(axis, angle):
    """``exp(-i angle sigma_axis / 2)`` in closed form."""
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    return np.cos(angle / 2) * np.eye(2, dtype=complex) - 1j * np.sin(angle / 2) * PAULI[axis]


def rotation(axis, angle):
    return unitary(rotation_matrix(axis, angle))


def hadamard():
    return unitary(HADAMARD)


def transpose_map(d=2):
    """``A -> A^T``: positive but not completely positive."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j + i * d, i + j * d] = 1.0
    return Channel(s)


# -------------------------------------------------------------- families


def _as_input(z, n):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (n,):
        raise ShapeError(f"input must have {n} coordinate(s), got shape {z.shape}")
    return z


@dataclass(frozen=True, eq=False)
class ParamChannel:
    """A map from inputs ``z`` in a box ``[lo, hi]`` to channels.

    ``builder`` receives ``z`` as a float array of shape ``(n,)`` and must be
    a deterministic function of it. ``superops``, when given, is a batched
    version returning an array ``(B, d^2, d^2)`` for inputs ``(B, n)``.
    ``unitary`` is set for families of the form ``rho -> U(z) rho U(z)^H``.
    """

    d: int
    lo: np.ndarray
    hi: np.ndarray
    builder: Callable[[np.ndarray], Channel]
    superops: Optional[Callable[[np.ndarray], np.ndarray]] = None
    unitary: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("domain bounds must satisfy lo <= hi coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self):
        return self.lo.size

    def __call__(self, z):
        return self.builder(_as_input(z, self.n))

    def superop_many(self, zs):
        zs = np.asarray(zs, dtype=float).reshape(-1, self.n)
        if self.superops is not None:
            return self.superops(zs)
        return np.stack([self.builder(z).superop for z in zs])

    def with_domain(self, lo, hi):
        return ParamChannel(self.d, lo, hi, self.builder, self.superops, self.unitary, self.name, self.meta)


def constant_family(ch, lo=0.0, hi=1.0, name="constant"):
    n = np.atleast_1d(lo).size

    def superops(zs):
        return np.broadcast_to(ch.superop, (len(zs),) + ch.superop.shape)

    return ParamChannel(ch.d, lo, hi, lambda z: ch, superops, name=name)


def _kron_batch(a, b):
    bsz, d, _ = a.shape
    return np.einsum("bij,bkl->bikjl", a, b).reshape(bsz, d * d, d * d)


def unitary_family(u_of_z, d, lo, hi, name="unitary"):
    """Family ``rho -> U(z) rho U(z)^H`` for a callable ``U(z)``."""

    def builder(z):
        return unitary(u_of_z(z))

    return ParamChannel(d, lo, hi, builder, unitary=u_of_z, name=name)


def rotation_family(axis, gain=1.0, lo=0.0, hi=2 * np.pi):
    """``rho -> R(gain z) rho R(gain z)^H`` with ``R`` a Pauli rotation."""
    if axis not in PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    sigma = PAULI[axis]

    def u_of_z(z):
        return rotation_matrix(axis, gain * z[0])

    def superops(zs):
        ang = gain * zs[:, 0] / 2
        u = np.cos(ang)[:, None, None] * np.eye(2) - 1j * np.sin(ang)[:, None, None] * sigma
        return _kron_batch(u.conj(), u)

    return ParamChannel(
        2, lo, hi, lambda z: unitary(u_of_z(z)), superops, u_of_z, f"rotation_{axis}", {"gain": gain}
    )


def depolarizing_family(d=2, lo=0.0, hi=1.0):
    """``z -> depolarizing_input(z)`` on the input interval ``[lo, hi]``."""
    ident = vec(np.eye(d, dtype=complex))
    proj = np.outer(ident, ident) / d

    def superops(zs):
        z = zs[:, 0][:, None, None]
        return z * np.eye(d * d) + (1 - z) * proj

    return ParamChannel(d, lo, hi, lambda z: depolarizing_input(float(z[0]), d), superops, name="depolarizing")


def compose_family(outer, inner, name=None):
    """Family ``z -> outer o inner(z)`` for a fixed channel ``outer``."""
    if outer.d != inner.d:
        raise ShapeError("dimension mismatch")

    def builder(z):
        return compose(outer, inner.builder(z))

    def superops(zs):
        return np.einsum("ij,bjk->bik", outer.superop, inner.superop_many(zs))

    return ParamChannel(
        inner.d, inner.lo, inner.hi, builder, superops, None, name or f"contracted({inner.name})"
    )


def chain_family(stages, lo, hi, name="chain"):
    """Compose a list of channels and families, applied first to last."""
    d = stages[0].d
    n = np.atleast_1d(lo).size

    def superops(zs):
        out = np.broadcast_to(np.eye(d * d, dtype=complex), (len(zs), d * d, d * d))
        for st in stages:
            s = st.superop_many(zs) if isinstance(st, ParamChannel) else st.superop
            out = np.matmul(s, out)
        return out

    def builder(z):
        return Channel(superops(z.reshape(1, n))[0])

    return ParamChannel(d, lo, hi, builder, superops, name=name)


# ------------------------------------------------------------- Lindblad

_ENCODINGS = {"linear": lambda z: z, "quadratic": lambda z: z * z}


@dataclass(frozen=True)
class LindbladModel:
    """Driven, damped qubit: ``H(z) = f(z) sigma_x / 2`` and jump operator ``sigma_minus``.

    ``encoding`` selects ``f``: ``"linear"`` (``f(z) = z``) or ``"quadratic"``
    (``f(z) = z**2``). ``gamma`` is the decay rate and ``dtau`` the time for
    which each input is held.
    """

    gamma: float
    dtau: float = 1.0
    encoding: str = "linear"

    def __post_init__(self):
        if not self.gamma > 0 or not self.dtau > 0:
            raise ValueError("gamma and dtau must be positive")
        if self.encoding not in _ENCODINGS:
            raise ValueError(f"encoding must be one of {sorted(_ENCODINGS)}")

    def hamiltonian(self, z):
        return _ENCODINGS[self.encoding](float(z)) * SIGMA_X / 2


def lindbladian(model, z):
    """Superoperator of ``-i[H, rho] + g L rho L^H - g/2 {L^H L, rho}``."""
    h = model.hamiltonian(z)
    jump = SIGMA_MINUS
    ident = np.eye(2)
    ljl = jump.conj().T @ jump
    coherent = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    dissipative = model.gamma * (
        np.kron(jump.conj(), jump) - 0.5 * np.kron(ident, ljl) - 0.5 * np.kron(ljl.T, ident)
    )
    return coherent + dissipative


def lindblad_step_channel(model, z):
    """Channel ``exp(L(z) dtau)`` obtained by exact exponentiation."""
    return Channel(linalg.matrix_exp(lindbladian(model, z), model.dtau))


def lindblad_family(model, lo=-2.0, hi=2.0):
    return ParamChannel(
        2, lo, hi, lambda z: lindblad_step_channel(model, z[0]), name="lindblad", meta={"model": model}
    )


# -------------------------------------------------------- contractivity


@dataclass(frozen=True)
class ContractionEstimate:
    max_ratio: float
    samples: int


def contraction_estimate(ch, samples=100, seed=0):
    """Largest sampled ratio ``||T(r1) - T(r2)||_1 / ||r1 - r2||_1`` over Ginibre pairs.

    A lower bound on the true contraction constant.
    """
    rng = np.random.default_rng(seed)
    d = ch.d
    worst = 0.0
    for _ in range(samples):
        r1 = random_density(d, rng)
        r2 = random_density(d, rng)
        den = linalg.trace_norm(r1 - r2)
        if den == 0.0:
            continue
        worst = max(worst, linalg.trace_norm(apply(ch, r1) - apply(ch, r2)) / den)
    return ContractionEstimate(worst, samples)
