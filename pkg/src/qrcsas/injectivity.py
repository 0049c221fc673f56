"""Injectivity and degeneracy diagnostics for affine reservoir filters.

The local test is a rank condition on the input-derivative of the state
map: for an input ``z`` and state ``x`` the ``N x n`` matrix with columns
``Dp_k(z) x + Dq_k(z)`` should have full column rank. Everything here is
evidence on grids and samples, never a proof.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import EspViolationError, NonFiniteError, NoFixedPointError
from .quantum import (
    Channel,
    LindbladModel,
    ParamChannel,
    apply,
    contraction_estimate,
    lindblad_family,
    random_density,
)
from .sas import (
    domain_grid,
    extract_sas,
    extract_superop,
    filter_eval,
    fixed_point,
    fixed_points,
    from_bloch,
    gell_mann_basis,
    split_superop,
    to_bloch,
    washout_length,
)

FD_STEP = 1e-6
RANK_ABS_TOL = 1e-9
PREIMAGE_TOL = 1e-8
CONTRACTION_THRESHOLD = 1 - 1e-6


# ----------------------------------------------------------- derivatives


@dataclass(frozen=True, eq=False)
class DerivativeBundle:
    z: np.ndarray
    Dp: np.ndarray  # (n, N, N)
    Dq: np.ndarray  # (N, n)
    h: np.ndarray  # (n,)


def _difference(sas, z, h):
    """Second-order difference quotients of ``p`` and ``q`` with steps ``h``."""
    n = sas.n
    pts = []
    schemes = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h[k]
        if z[k] - h[k] >= sas.lo[k] and z[k] + h[k] <= sas.hi[k]:
            schemes.append(("c", k))
            pts += [z + e, z - e]
        elif z[k] + h[k] > sas.hi[k]:
            schemes.append(("b", k))
            pts += [z, z - e, z - 2 * e]
        else:
            schemes.append(("f", k))
            pts += [z, z + e, z + 2 * e]
    ps, qs = sas.pq_many(np.array(pts))
    dp = np.empty((n, sas.N, sas.N))
    dq = np.empty((sas.N, n))
    i = 0
    for kind, k in schemes:
        if kind == "c":
            dp[k] = (ps[i] - ps[i + 1]) / (2 * h[k])
            dq[:, k] = (qs[i] - qs[i + 1]) / (2 * h[k])
            i += 2
        else:
            sgn = 1.0 if kind == "f" else -1.0
            dp[k] = sgn * (-3 * ps[i] + 4 * ps[i + 1] - ps[i + 2]) / (2 * h[k])
            dq[:, k] = sgn * (-3 * qs[i] + 4 * qs[i + 1] - qs[i + 2]) / (2 * h[k])
            i += 3
        if not (np.all(np.isfinite(dp[k])) and np.all(np.isfinite(dq[:, k]))):
            raise NonFiniteError(k)
    return dp, dq


def frechet_pq(sas, z, h=FD_STEP, richardson=False):
    """Input derivatives of ``p`` and ``q`` by finite differences.

    Central differences with step ``h * max(1, |z_k|)`` per coordinate;
    one-sided second-order differences within ``h`` of the domain boundary.
    With ``richardson=True`` the step is halved once and the two estimates
    are combined to cancel the leading error term.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    steps = h * np.maximum(1.0, np.abs(z))
    dp, dq = _difference(sas, z, steps)
    if richardson:
        dp2, dq2 = _difference(sas, z, steps / 2)
        dp = (4 * dp2 - dp) / 3
        dq = (4 * dq2 - dq) / 3
    return DerivativeBundle(z, dp, dq, steps)


# ------------------------------------------------------------------ rank


@dataclass(frozen=True, eq=False)
class RankReport:
    z: np.ndarray
    x: np.ndarray
    M: np.ndarray
    singular_values: np.ndarray
    rank: int
    passed: bool

    @property
    def norm(self):
        """Euclidean norm of ``M``; for one input this is the length of its column."""
        return float(np.sqrt(np.sum(self.M**2)))

    @property
    def min_singular_value(self):
        n = self.M.shape[1]
        return float(self.singular_values[n - 1]) if len(self.singular_values) >= n else 0.0


def condition_matrix(bundle, x):
    """Columns ``Dp_k x + Dq_k``."""
    return np.einsum("kij,j->ik", bundle.Dp, np.asarray(x, dtype=float)) + bundle.Dq


def _rank(m, rel_tol, abs_tol):
    sv = linalg.singular_values(m)
    if sv.size == 0 or sv[0] <= abs_tol:
        return sv, 0
    return sv, int(np.sum(sv > max(rel_tol * sv[0], abs_tol)))


def rank_condition(sas, z, x, rel_tol=linalg.DEFAULT_RANK_TOL, abs_tol=RANK_ABS_TOL, bundle=None):
    """Rank test of the input-derivative map at ``(z, x)``.

    ``abs_tol`` treats a condition matrix whose largest singular value is
    at finite-difference noise level as zero.
    """
    if bundle is None:
        bundle = frechet_pq(sas, z)
    m = condition_matrix(bundle, x)
    sv, rank = _rank(m, rel_tol, abs_tol)
    return RankReport(bundle.z, np.asarray(x, dtype=float), m, sv, rank, rank == sas.n)


# ------------------------------------------------------------- sampling


def _random_inputs(rng, lo, hi, shape):
    return lo + (hi - lo) * rng.random(shape + (lo.size,))


def _drive_batch(sas, zs, x0=None):
    """Drive ``B`` sequences of shape ``(B, T, n)`` in lockstep; return final states."""
    b, t, n = zs.shape
    ps, qs = sas.pq_many(zs.reshape(-1, n))
    ps = ps.reshape(b, t, sas.N, sas.N)
    qs = qs.reshape(b, t, sas.N)
    x = np.zeros((b, sas.N)) if x0 is None else np.array(x0, dtype=float)
    for k in range(t):
        x = np.einsum("bij,bj->bi", ps[:, k], x) + qs[:, k]
    return x


def _require_esp(sas):
    if not sas.esp.passed:
        raise EspViolationError(f"max spectral norm of p is {sas.esp.max_norm:.6g} >= 1")
    return sas.esp.max_norm


def reachable_sample(sas, count, seq_len=None, seed=0):
    """End states of ``count`` random input sequences drawn uniformly from the domain.

    ``seq_len`` defaults to the washout that shrinks initial-condition
    influence below 1e-10.
    """
    max_norm = _require_esp(sas)
    if seq_len is None:
        seq_len = washout_length(max_norm, 1e-10)
    rng = np.random.default_rng(seed)
    zs = _random_inputs(rng, sas.lo, sas.hi, (count, seq_len))
    return _drive_batch(sas, zs)


@dataclass(frozen=True, eq=False)
class InjectivityScan:
    reports: list
    witnesses: list
    min_singular_value: float
    grid_size: int
    sample_size: int

    @property
    def passed(self):
        return not self.witnesses

    @property
    def verdict(self):
        # sampling evidence only
        return "certified-on-samples" if self.passed else "failed"


def global_injectivity_scan(sas, z_grid, x_samples, rel_tol=linalg.DEFAULT_RANK_TOL, abs_tol=RANK_ABS_TOL):
    """Rank condition at every pair of grid input and sampled state."""
    z_grid = np.asarray(z_grid, dtype=float).reshape(-1, sas.n)
    x_samples = np.atleast_2d(np.asarray(x_samples, dtype=float))
    if len(z_grid) == 0 or len(x_samples) == 0:
        raise ValueError("grid and samples must be nonempty")
    reports, witnesses = [], []
    smin = math.inf
    for z in z_grid:
        bundle = frechet_pq(sas, z)
        for x in x_samples:
            r = rank_condition(sas, z, x, rel_tol, abs_tol, bundle)
            reports.append(r)
            smin = min(smin, r.min_singular_value)
            if not r.passed:
                witnesses.append((z.copy(), x.copy()))
    return InjectivityScan(reports, witnesses, smin, len(z_grid), len(x_samples))


def local_injectivity_at_constant(sas, z0, rel_tol=linalg.DEFAULT_RANK_TOL, abs_tol=RANK_ABS_TOL):
    """Rank condition at the fixed point of the constant input ``z0``.

    Raises
    ------
    NoFixedPointError
        If ``I - p(z0)`` is singular.
    """
    x0 = fixed_point(sas, z0)
    return rank_condition(sas, z0, x0, rel_tol, abs_tol)


# -------------------------------------------------------------- preimage


def _grid_steps(grid):
    steps = np.empty(grid.shape[1])
    for k in range(grid.shape[1]):
        u = np.unique(grid[:, k])
        steps[k] = np.min(np.diff(u)) if u.size > 1 else 1.0
    return steps


def _cluster(points, steps):
    """Connected components of grid points that are neighbours on the grid."""
    m = len(points)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if np.all(np.abs(points[i] - points[j]) <= steps * (1 + 1e-9)):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: tuple(points[g[0]]))


@dataclass(frozen=True, eq=False)
class PreimageSet:
    x0: np.ndarray
    tol: float
    points: np.ndarray
    clusters: list  # list of index arrays into points
    representatives: np.ndarray
    sequence_deviation: Optional[float]

    @property
    def empty(self):
        return len(self.points) == 0


def preimage_constant_output(sas, x0, z_grid, tol=PREIMAGE_TOL, n_sequences=20, seq_len=200, seed=0):
    """Grid inputs whose constant-input fixed point equals ``x0``, plus a sequence check.

    Grid hits are clustered by grid adjacency; each cluster is represented
    by the member closest to ``x0``. Random sequences with entries drawn
    from the representatives are then driven from zero, and the largest
    distance to ``x0`` after washout is stored as ``sequence_deviation``.
    """
    max_norm = _require_esp(sas)
    z_grid = np.asarray(z_grid, dtype=float).reshape(-1, sas.n)
    x0 = np.asarray(x0, dtype=float)
    xs = fixed_points(sas, z_grid)
    dist = np.linalg.norm(xs - x0, axis=1)
    hit = dist < tol
    points = z_grid[hit]
    if not len(points):
        return PreimageSet(x0, tol, points, [], points, None)
    clusters = _cluster(points, _grid_steps(z_grid))
    reps = np.array([points[min(c, key=lambda i: dist[hit][i])] for c in clusters])
    washout = washout_length(max_norm, 1e-12)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_sequences):
        seq = reps[rng.integers(0, len(reps), size=washout + seq_len)]
        traj = filter_eval(sas, seq, check_esp=False)[washout:]
        worst = max(worst, float(np.max(np.linalg.norm(traj - x0, axis=1))))
    return PreimageSet(x0, tol, points, clusters, reps, worst)


# -------------------------------------------------------- constant filter


@dataclass(frozen=True, eq=False)
class ContractedEncoding:
    """Split ``T(rho, z) = outer(encoding(z)(rho))`` with a fixed strictly contractive ``outer``."""

    outer: Channel
    encoding: ParamChannel


@dataclass(frozen=True, eq=False)
class ConstantFilterReport:
    grid: np.ndarray
    fixed_points: np.ndarray
    deviation: float
    tol: float
    collapse_spread: float
    rho_T: Optional[np.ndarray] = None
    rho_prime: Optional[np.ndarray] = None
    rho_prime_defect: Optional[float] = None
    rho_E: Optional[np.ndarray] = None
    commutator_residual: Optional[float] = None

    @property
    def constant(self):
        return self.deviation < self.tol

    @property
    def verdict(self):
        return "constant" if self.constant else "input-dependent"


def _max_pairwise(xs):
    diff = xs[:, None, :] - xs[None, :, :]
    return float(np.max(np.sqrt(np.sum(diff**2, axis=-1))))


def channel_fixed_point(ch, basis=None):
    """Unique fixed density matrix of a channel whose Bloch block has no eigenvalue one."""
    basis = basis or gell_mann_basis(ch.d)
    p, q = split_superop(extract_superop(ch, basis), ch.d)
    try:
        x = linalg.solve_linear(np.eye(len(q)) - p, q)
    except Exception as exc:
        raise NoFixedPointError(getattr(exc, "pivot_index", -1), getattr(exc, "pivot_value", 0.0)) from exc
    return from_bloch(x, basis)


def constant_filter_check(
    target,
    z_grid=None,
    tol=1e-8,
    split=None,
    n_starts=25,
    n_sequences=20,
    steps=200,
    seed=0,
):
    """Decide whether the constant-input fixed point, and hence the filter, is input independent.

    Parameters
    ----------
    target : SasModel or ParamChannel
    z_grid : array_like, optional
        Inputs at which fixed points are compared; the model's default grid
        when omitted.
    split : ContractedEncoding, optional
        When given, the fixed density of the whole map, the encoded state
        ``rho' = J(rho_T, v)`` over the grid, the fixed point of the outer
        channel and, for unitary encodings, ``max ||[rho_T, U(v)]||_1`` are
        reported as well.

    Notes
    -----
    ``collapse_spread`` is the diameter of the set of final states after
    driving ``n_starts`` random initial states with each of
    ``n_sequences`` random input sequences for ``steps`` steps. It is tiny
    exactly when the filter is constant.
    """
    sas = extract_sas(target) if isinstance(target, ParamChannel) else target
    _require_esp(sas)
    if z_grid is None:
        z_grid = domain_grid(sas.lo, sas.hi, sas.grid_resolution)
    z_grid = np.asarray(z_grid, dtype=float).reshape(-1, sas.n)
    xs = fixed_points(sas, z_grid)
    deviation = _max_pairwise(xs)

    rng = np.random.default_rng(seed)
    basis = sas.basis or gell_mann_basis(int(round(math.sqrt(sas.N + 1))))
    starts = np.array([to_bloch(random_density(basis.d, rng), basis) for _ in range(n_starts)])
    finals = []
    for _ in range(n_sequences):
        ps, qs = sas.pq_many(_random_inputs(rng, sas.lo, sas.hi, (steps,)))
        x = starts.copy()
        for p, q in zip(ps, qs):
            x = x @ p.T + q
        finals.append(x)
    spread = _max_pairwise(np.concatenate(finals))

    extras = {}
    if split is not None:
        rho_t = from_bloch(np.mean(xs, axis=0), basis)
        primes = [apply(split.encoding(v), rho_t) for v in z_grid]
        extras["rho_T"] = rho_t
        extras["rho_prime"] = primes[0]
        extras["rho_prime_defect"] = max(linalg.trace_norm(r - primes[0]) for r in primes)
        extras["rho_E"] = channel_fixed_point(split.outer, basis)
        if split.encoding.unitary is not None:
            extras["commutator_residual"] = max(
                linalg.trace_norm(rho_t @ u - u @ rho_t)
                for u in (split.encoding.unitary(v) for v in z_grid)
            )
    return ConstantFilterReport(z_grid, xs, deviation, tol, spread, **extras)


@dataclass(frozen=True)
class SufficiencyReport:
    holds: bool
    defect: float
    contraction_ratio: float


def fixed_state_invariance_check(outer, encoding, z_grid, samples=100, seed=0, tol=1e-9):
    """Does the outer channel's fixed state survive every encoding step unchanged?

    Computes ``max_v ||J(rho_E, v) - rho_E||_1``. When this is below ``tol``
    the filter is constant; the converse does not hold.

    Raises
    ------
    ValueError
        If the sampled contraction ratio of ``outer`` is not below ``1 - 1e-6``.
    """
    est = contraction_estimate(outer, samples, seed)
    if not est.max_ratio < CONTRACTION_THRESHOLD:
        raise ValueError(f"outer channel is not strictly contractive (sampled ratio {est.max_ratio:.9f})")
    rho_e = channel_fixed_point(outer)
    z_grid = np.asarray(z_grid, dtype=float).reshape(-1, encoding.n)
    defect = max(linalg.trace_norm(apply(encoding(v), rho_e) - rho_e) for v in z_grid)
    return SufficiencyReport(defect < tol, float(defect), est.max_ratio)


# ------------------------------------------------------- counterexamples


def shifted_pairs(lo, hi, shift):
    """Generator of pairs ``(z, z + shift)`` with ``z`` uniform on ``[lo, hi]``."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))

    def gen(rng, length):
        z = _random_inputs(rng, lo, hi, (length,))
        return z, z + shift

    return gen


def random_pairs(lo, hi):
    """Generator of two independent uniform sequences."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))

    def gen(rng, length):
        return _random_inputs(rng, lo, hi, (length,)), _random_inputs(rng, lo, hi, (length,))

    return gen


def identical_pairs(lo, hi):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))

    def gen(rng, length):
        z = _random_inputs(rng, lo, hi, (length,))
        return z, z.copy()

    return gen


@dataclass(frozen=True, eq=False)
class CounterexampleResult:
    witness: Optional[tuple]
    input_gap: Optional[float]
    output_gap: Optional[float]
    trials: int
    smallest_output_gap: float
    skipped: int = 0

    @property
    def found(self):
        return self.witness is not None


def counterexample_search(
    sas, pair_generator, tol_in=0.5, tol_out=1e-10, trials=1000, seq_len=50, seed=0, batch=200
):
    """Look for distinct input sequences whose outputs agree everywhere.

    Both sequences are driven from the zero state and outputs are compared
    at every step. Pairs are generated ``batch`` at a time; pairs not
    separated by more than ``tol_in`` in sup norm are skipped and counted
    in ``skipped``.

    Raises
    ------
    ValueError
        If a whole batch contains no separated pair, which means the
        generator cannot produce admissible pairs.
    """
    _require_esp(sas)
    rng = np.random.default_rng(seed)
    best = math.inf
    done = skipped = 0
    while done < trials:
        size = min(batch, trials - done)
        pairs = [pair_generator(rng, seq_len) for _ in range(size)]
        a = np.array([p[0] for p in pairs]).reshape(size, seq_len, sas.n)
        b = np.array([p[1] for p in pairs]).reshape(size, seq_len, sas.n)
        gaps_in = np.max(np.abs(a - b), axis=(1, 2))
        ok = gaps_in > tol_in
        if not np.any(ok):
            raise ValueError(f"pair generator produced no inputs separated by more than {tol_in}")
        skipped += int(np.sum(~ok))
        out_gaps = np.where(ok, _output_gaps(sas, a, b), np.inf)
        for i in range(size):
            if out_gaps[i] < tol_out:
                return CounterexampleResult(
                    (a[i], b[i]), float(gaps_in[i]), float(out_gaps[i]), done + i + 1, float(out_gaps[i]), skipped
                )
        best = min(best, float(np.min(out_gaps)))
        done += size
    return CounterexampleResult(None, None, None, done, best, skipped)


def _output_gaps(sas, a, b):
    size, t, n = a.shape
    pa, qa = sas.pq_many(a.reshape(-1, n))
    pb, qb = sas.pq_many(b.reshape(-1, n))
    pa, pb = pa.reshape(size, t, sas.N, sas.N), pb.reshape(size, t, sas.N, sas.N)
    qa, qb = qa.reshape(size, t, sas.N), qb.reshape(size, t, sas.N)
    xa = np.zeros((size, sas.N))
    xb = np.zeros((size, sas.N))
    gap = np.zeros(size)
    for k in range(t):
        xa = np.einsum("bij,bj->bi", pa[:, k], xa) + qa[:, k]
        xb = np.einsum("bij,bj->bi", pb[:, k], xb) + qb[:, k]
        gap = np.maximum(gap, np.linalg.norm(xa - xb, axis=1))
    return gap


# ----------------------------------------------------------------- fig 1


def lindblad_fixed_point_closed_form(gamma, z, encoding="linear"):
    """Steady Bloch vector of the driven damped qubit, drive amplitude ``f(z)``."""
    f = z if encoding == "linear" else z * z
    den = 2 * f * f + gamma * gamma
    return np.array([0.0, -2 * f * gamma / den, -gamma * gamma / den]) / math.sqrt(2)


def near_singular_line(gamma, z):
    """Points close to ``gamma**2 = 16 z**2``, excluded from pass/fail decisions."""
    return abs(gamma**2 - 16 * z**2) <= 0.1 * (gamma**2 + 16 * z**2 + 1)


@dataclass(frozen=True, eq=False)
class Fig1Result:
    gammas: np.ndarray
    zs: np.ndarray
    norm: np.ndarray  # (len(gammas), len(zs))
    rank: np.ndarray
    min_singular_value: np.ndarray
    residual: np.ndarray
    near_singular: np.ndarray
    failed: np.ndarray
    dtau: float
    encoding: str

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "gamma", "norm", "rank", "min_singular_value", "residual", "near_singular"])
            for i, g in enumerate(self.gammas):
                for j, z in enumerate(self.zs):
                    w.writerow(
                        [
                            repr(float(z)),
                            repr(float(g)),
                            repr(float(self.norm[i, j])),
                            int(self.rank[i, j]),
                            repr(float(self.min_singular_value[i, j])),
                            repr(float(self.residual[i, j])),
                            int(self.near_singular[i, j]),
                        ]
                    )


def default_fig1_axes(resolution=101):
    gammas = np.linspace(2.0 / resolution, 2.0, resolution)
    zs = np.linspace(-2.0, 2.0, resolution)
    return gammas, zs


def _fig1_row(gamma, zs, dtau, encoding):
    model = LindbladModel(float(gamma), dtau, encoding)
    lo, hi = float(np.min(zs)) - 1.0, float(np.max(zs)) + 1.0
    sas = extract_sas(lindblad_family(model, lo, hi))
    out = np.full((5, len(zs)), np.nan)
    for j, z in enumerate(zs):
        try:
            x = fixed_point(sas, z)
            r = rank_condition(sas, z, x)
        except (ArithmeticError, ValueError):
            continue
        res = float(np.max(np.abs(x - lindblad_fixed_point_closed_form(gamma, z, encoding))))
        out[:, j] = [r.norm, r.rank, r.min_singular_value, res, 0.0]
    return out


def fig1_scan(gammas=None, zs=None, dtau=1.0, encoding="linear", jobs=1):
    """Rank-condition norm at the constant-input fixed point over a ``(gamma, z)`` grid.

    Each row uses its own Lindblad model. Points where the solve fails are
    flagged in ``failed`` and the scan continues. ``jobs > 1`` distributes
    rows over processes; results are placed by grid index.
    """
    dg, dz = default_fig1_axes()
    gammas = dg if gammas is None else np.asarray(gammas, dtype=float)
    zs = dz if zs is None else np.asarray(zs, dtype=float)
    if np.any(gammas <= 0):
        raise ValueError("gamma values must be positive")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_fig1_row, gammas, [zs] * len(gammas), [dtau] * len(gammas), [encoding] * len(gammas)))
    else:
        rows = [_fig1_row(g, zs, dtau, encoding) for g in gammas]
    data = np.stack(rows)  # (G, 5, Z)
    failed = np.isnan(data[:, 0, :])
    near = np.array([[near_singular_line(g, z) for z in zs] for g in gammas])
    return Fig1Result(
        gammas,
        zs,
        data[:, 0, :],
        np.nan_to_num(data[:, 1, :], nan=-1).astype(int),
        data[:, 2, :],
        data[:, 3, :],
        near,
        failed,
        dtau,
        encoding,
    )
