"""State-affine (Bloch) representation of parameterized channels.

With an orthonormal Hermitian basis ``B_1 = I/sqrt(d), B_2, ..., B_{d^2}``
a density matrix is ``rho = I/d + sum_i x_i B_{i+1}`` with real Bloch
coordinates ``x_i = tr(B_{i+1} rho)``. A channel then acts affinely,
``x -> p x + q``, where ``p`` is the traceless block of the matrix
``T_ij = tr(B_i^H T(B_j))`` and ``q = T[1:, 0] / sqrt(d)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import ChannelError, EspViolationError, NoFixedPointError, ShapeError, SingularMatrixError
from .quantum import Channel, ParamChannel, apply, vec

EXTRACT_TOL = 1e-10
ESP_MARGIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    """Orthonormal Hermitian basis with ``elements[0] = I / sqrt(d)``."""

    d: int
    elements: np.ndarray  # (d^2, d, d)
    phase: str = "alternating"

    @cached_property
    def vec_matrix(self):
        """Columns are ``vec(B_j)``; unitary since the basis is orthonormal."""
        return np.stack([vec(b) for b in self.elements], axis=1)

    @property
    def N(self):
        return self.d * self.d - 1

    def __len__(self):
        return len(self.elements)


def gell_mann_basis(d, phase="alternating"):
    """Generalized Gell-Mann basis, Hilbert-Schmidt normalized.

    Parameters
    ----------
    d : int
        Hilbert-space dimension, at least 2.
    phase : {"alternating", "standard"}
        ``"standard"`` gives the usual symmetric, antisymmetric and diagonal
        generators in that order; for ``d = 2`` this is Pauli/sqrt(2).
        ``"alternating"`` conjugates every generator by
        ``diag(1, -1, 1, ...)``, which for a qubit flips the signs of the
        x and y elements. Rotations ``exp(-i z sigma_y / 2)`` then act on
        Bloch vectors as ``[[cos z, 0, -sin z], [0, 1, 0], [sin z, 0, cos z]]``.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if phase not in ("alternating", "standard"):
        raise ValueError(f"unknown phase convention {phase!r}")
    elems = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / math.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j / math.sqrt(2)
            a[k, j] = 1j / math.sqrt(2)
            elems += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        elems.append(np.diag(diag / math.sqrt(l * (l + 1))).astype(complex))
    elems = np.array(elems)
    if phase == "alternating":
        par = np.array([(-1) ** i for i in range(d)], dtype=float)
        elems = elems * par[None, :, None] * par[None, None, :]
    elems.setflags(write=False)
    return GellMannBasis(d, elems, phase)


def to_bloch(rho, basis):
    """Real coordinates ``tr(B_i rho)`` for ``i >= 2``."""
    rho = np.asarray(rho)
    if rho.shape != (basis.d, basis.d):
        raise ShapeError(f"expected a {basis.d}x{basis.d} matrix, got {rho.shape}")
    return np.real(basis.vec_matrix[:, 1:].conj().T @ vec(rho))


def from_bloch(x, basis):
    """Hermitian unit-trace matrix ``I/d + sum_i x_i B_{i+1}``; positivity is not checked."""
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.N,):
        raise ShapeError(f"expected {basis.N} Bloch coordinates, got {x.shape}")
    return np.eye(basis.d, dtype=complex) / basis.d + np.tensordot(x, basis.elements[1:], axes=1)


def _real_block(t, d):
    imag = float(np.max(np.abs(t.imag)))
    if imag > EXTRACT_TOL:
        raise ChannelError(f"basis matrix has imaginary residue {imag:.3e}; map is not Hermiticity preserving")
    t = t.real
    first = np.zeros(t.shape[-1])
    first[0] = 1.0
    defect = float(np.max(np.abs(t[..., 0, :] - first)))
    if defect > EXTRACT_TOL:
        raise ChannelError(f"first row defect {defect:.3e}; map is not trace preserving")
    return t


def extract_superop(ch, basis):
    """Real matrix ``T_ij = tr(B_i^H T(B_j))`` of a channel in the given basis.

    Raises
    ------
    ChannelError
        If the result has an imaginary part or its first row differs from
        ``(1, 0, ..., 0)``, both beyond 1e-10.
    """
    if ch.d != basis.d:
        raise ShapeError("channel and basis dimensions differ")
    w = basis.vec_matrix
    return _real_block(w.conj().T @ ch.superop @ w, basis.d)


def split_superop(t, d):
    """Return ``(p, q)`` from a basis matrix."""
    return t[1:, 1:].copy(), t[1:, 0] / math.sqrt(d)


@dataclass(frozen=True, eq=False)
class EspReport:
    grid: np.ndarray
    norms: np.ndarray
    max_norm: float
    margin: float
    passed: bool

    @property
    def verdict(self):
        # failure of the spectral-norm bound does not rule out contraction in another norm
        return "pass" if self.passed else "inconclusive"


@dataclass(frozen=True, eq=False)
class SasModel:
    """Affine recursion ``x_t = p(z_t) x_{t-1} + q(z_t)``.

    ``pq_batch`` maps inputs of shape ``(B, n)`` to ``(p, q)`` arrays of shapes
    ``(B, N, N)`` and ``(B, N)``.
    """

    n: int
    N: int
    lo: np.ndarray
    hi: np.ndarray
    pq_batch: Callable[[np.ndarray], tuple]
    source: str = "closed-form"
    basis: Optional[GellMannBasis] = None
    channel: Optional[ParamChannel] = None
    grid_resolution: int = 101
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))
        if self.lo.shape != (self.n,) or self.hi.shape != (self.n,):
            raise ShapeError("domain bounds must have one entry per input coordinate")

    def _inputs(self, zs):
        return np.asarray(zs, dtype=float).reshape(-1, self.n)

    def pq_many(self, zs):
        return self.pq_batch(self._inputs(zs))

    def pq(self, z):
        p, q = self.pq_batch(self._inputs(z)[:1])
        return p[0], q[0]

    def p(self, z):
        return self.pq(z)[0]

    def q(self, z):
        return self.pq(z)[1]

    def step(self, x, z):
        p, q = self.pq(z)
        return p @ x + q

    def with_domain(self, lo, hi):
        return SasModel(
            self.n, self.N, lo, hi, self.pq_batch, self.source, self.basis, self.channel, self.grid_resolution, self.meta
        )

    @cached_property
    def esp(self):
        """ESP report on the default domain grid, computed once."""
        return esp_check(self, domain_grid(self.lo, self.hi, self.grid_resolution))


def closed_form_sas(p_fn, q_fn, N, lo, hi, **kwargs):
    """Model from per-point callables ``p_fn(z)`` and ``q_fn(z)`` taking arrays of shape ``(n,)``."""
    n = np.atleast_1d(lo).size

    def pq_batch(zs):
        return np.stack([p_fn(z) for z in zs]), np.stack([q_fn(z) for z in zs])

    return SasModel(n, N, lo, hi, pq_batch, "closed-form", **kwargs)


def extract_sas(pch, basis=None):
    """Affine representation of a parameterized channel.

    The channel is re-expressed in ``basis`` (alternating Gell-Mann by
    default) at every requested input; nothing is sampled in advance.
    """
    basis = basis or gell_mann_basis(pch.d)
    if basis.d != pch.d:
        raise ShapeError("channel and basis dimensions differ")
    w = basis.vec_matrix
    wh = w.conj().T
    rd = math.sqrt(basis.d)

    def pq_batch(zs):
        t = _real_block(wh @ pch.superop_many(zs) @ w, basis.d)
        return t[:, 1:, 1:].copy(), t[:, 1:, 0] / rd

    return SasModel(pch.n, basis.N, pch.lo, pch.hi, pq_batch, "extracted-from-channel", basis, pch)


def compose_sas(p_outer, q_outer, inner):
    """SAS of ``E o J(z)`` from the constant block of ``E`` and the model of ``J``."""

    def pq_batch(zs):
        p, q = inner.pq_batch(zs)
        return np.einsum("ij,bjk->bik", p_outer, p), q @ p_outer.T + q_outer

    return SasModel(inner.n, inner.N, inner.lo, inner.hi, pq_batch, inner.source, inner.basis)


def domain_grid(lo, hi, resolution=101):
    """Uniform tensor grid over the box ``[lo, hi]``, shape ``(resolution**n, n)``."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if resolution < 1:
        raise ValueError("resolution must be positive")
    axes = [np.linspace(a, b, resolution) if resolution > 1 else np.array([a]) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def esp_check(sas, grid=None, margin_tol=ESP_MARGIN_TOL):
    """Spectral-norm contraction test of ``p`` over a grid of inputs.

    A pass (margin above ``margin_tol``, which absorbs rounding in norms
    that are exactly one) is conclusive. A fail only says the spectral
    norm does not certify contraction.
    """
    if grid is None:
        grid = domain_grid(sas.lo, sas.hi, sas.grid_resolution)
    grid = np.asarray(grid, dtype=float).reshape(-1, sas.n)
    if grid.shape[0] == 0:
        raise ValueError("grid must be nonempty")
    ps, _ = sas.pq_many(grid)
    norms = np.array([linalg.spectral_norm(p) for p in ps])
    max_norm = float(np.max(norms))
    margin = 1.0 - max_norm
    return EspReport(grid, norms, max_norm, margin, margin > margin_tol)


def washout_length(max_norm, tol=1e-10):
    """Smallest ``k`` with ``max_norm**k < tol``."""
    if not 0.0 <= max_norm < 1.0:
        raise EspViolationError(f"contraction bound {max_norm} is not below 1")
    if max_norm == 0.0:
        return 1
    return int(math.floor(math.log(tol) / math.log(max_norm))) + 1


def _check_in_domain(sas, zs):
    if np.any(zs < sas.lo - 1e-12) or np.any(zs > sas.hi + 1e-12):
        raise ValueError("inputs lie outside the model's domain")


def filter_eval(sas, inputs, x0=None, check_esp=True):
    """Drive the recursion with inputs fed oldest first.

    Parameters
    ----------
    sas : SasModel
    inputs : array_like, shape (T,) or (T, n)
    x0 : array_like, optional
        State before the first input; zero by default.
    check_esp : bool
        Refuse to run unless the spectral-norm bound over the domain grid is
        below one. Callers discard ``washout_length(sas.esp.max_norm)``
        leading states to forget ``x0``.

    Returns
    -------
    ndarray, shape (T, N)
        ``x_t`` after consuming ``z_t``.
    """
    zs = np.asarray(inputs, dtype=float).reshape(-1, sas.n)
    if check_esp:
        _check_in_domain(sas, zs)
        if not sas.esp.passed:
            raise EspViolationError(f"max spectral norm of p is {sas.esp.max_norm:.6g} >= 1")
    ps, qs = sas.pq_many(zs)
    x = np.zeros(sas.N) if x0 is None else np.array(x0, dtype=float)
    out = np.empty((len(zs), sas.N))
    for t in range(len(zs)):
        x = ps[t] @ x + qs[t]
        out[t] = x
    return out


def fixed_point(sas, z):
    """Solve ``(I - p(z)) x = q(z)``.

    Raises
    ------
    NoFixedPointError
        When ``I - p(z)`` is numerically singular.
    """
    p, q = sas.pq(z)
    try:
        return linalg.solve_linear(np.eye(sas.N) - p, q)
    except SingularMatrixError as exc:
        raise NoFixedPointError(exc.pivot_index, exc.pivot_value) from exc


def fixed_points(sas, zs):
    """Fixed points for many inputs, shape ``(B, N)``."""
    ps, qs = sas.pq_many(zs)
    eye = np.eye(sas.N)
    out = np.empty_like(qs)
    for i, (p, q) in enumerate(zip(ps, qs)):
        try:
            out[i] = linalg.solve_linear(eye - p, q)
        except SingularMatrixError as exc:
            raise NoFixedPointError(exc.pivot_index, exc.pivot_value) from exc
    return out


def affine_defect(sas, pch, zs, rhos):
    """Largest ``|to_bloch(T_z(rho)) - (p x + q)|`` over paired inputs and states."""
    basis = sas.basis or gell_mann_basis(pch.d)
    worst = 0.0
    ps, qs = sas.pq_many(zs)
    for z, p, q, rho in zip(np.asarray(zs, dtype=float).reshape(-1, sas.n), ps, qs, rhos):
        lhs = to_bloch(apply(pch(z), rho), basis)
        rhs = p @ to_bloch(rho, basis) + q
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def write_sas_csv(sas, grid, p_path, q_path):
    """Write ``p`` (row-major entries) and ``q`` over a grid to two CSV files."""
    grid = np.asarray(grid, dtype=float).reshape(-1, sas.n)
    ps, qs = sas.pq_many(grid)
    zcols = [f"z{k + 1}" for k in range(sas.n)] if sas.n > 1 else ["z"]
    with open(p_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(zcols + [f"p_{i + 1}_{j + 1}" for i in range(sas.N) for j in range(sas.N)])
        for z, p in zip(grid, ps):
            w.writerow([repr(float(v)) for v in z] + [repr(float(v)) for v in p.ravel()])
    with open(q_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(zcols + [f"q_{i + 1}" for i in range(sas.N)])
        for z, q in zip(grid, qs):
            w.writerow([repr(float(v)) for v in z] + [repr(float(v)) for v in q])
