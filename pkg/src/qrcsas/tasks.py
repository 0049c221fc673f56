"""Short-term-memory benchmark for affine reservoirs.

A reservoir is driven by i.i.d. uniform inputs, a linear readout with
offset is trained by ridge regression to recall the previous input, and
the squared correlation between target and readout on held-out data is
reported as the memory capacity.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .errors import DegenerateCapacityError
from .quantum import compose_family, reset_rate, rotation_family, state
from .sas import extract_sas, filter_eval

FIG2_EPSILONS = (0.2, 0.5, 0.8)
FIG2_HEADER = ["epsilon", "g", "mean_C", "std_C", "n_realizations"]


@dataclass(frozen=True)
class TaskConfig:
    washout: int = 100
    n_train: int = 1000
    n_test: int = 1000
    ridge: float = 1e-10
    realizations: int = 100
    seed: int = 0

    def __post_init__(self):
        if min(self.washout, self.n_train, self.n_test, self.realizations) <= 0:
            raise ValueError("washout, sample sizes and realizations must be positive")
        if self.ridge < 0:
            raise ValueError("ridge parameter must be nonnegative")

    def fast(self):
        """Same settings with 10 realizations."""
        return replace(self, realizations=10)


@dataclass(frozen=True)
class RidgeSolution:
    w: np.ndarray
    b: float

    def predict(self, X):
        return np.asarray(X) @ self.w + self.b


@dataclass(frozen=True, eq=False)
class CapacityResult:
    values: np.ndarray
    train_values: np.ndarray
    mean: float
    std: float

    @property
    def n_realizations(self):
        return len(self.values)


def gen_uniform_inputs(length, lo=0.0, hi=1.0, seed=None):
    """I.i.d. uniform inputs on ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random(length)


def drive_reservoir(sas, inputs, washout):
    """States after each input, with the first ``washout`` rows dropped."""
    if washout < 0:
        raise ValueError("washout must be nonnegative")
    return filter_eval(sas, inputs)[washout:]


def ridge_fit(X, target, lam):
    """Ridge regression with an unpenalized offset.

    Solves ``(X^T A X + lam I) w = X^T A y`` with the centering matrix
    ``A = I - 1 1^T / N`` and sets ``b = mean(y - X w)``.

    Raises
    ------
    SingularMatrixError
        If the regularized normal matrix is numerically singular.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(target, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (N, k) and target (N,)")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    w = linalg.solve_linear(xc.T @ xc + lam * np.eye(X.shape[1]), xc.T @ yc)
    b = float(np.mean(y - X @ w))
    return RidgeSolution(w, b)


def memory_capacity(target, output):
    """Squared correlation ``cov(a, b)^2 / (var(a) var(b))``.

    Raises
    ------
    DegenerateCapacityError
        If either sequence has zero variance.
    """
    a = np.asarray(target, dtype=float)
    b = np.asarray(output, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two 1-D sequences of equal length >= 2")
    ac = a - a.mean()
    bc = b - b.mean()
    va = float(ac @ ac)
    vb = float(bc @ bc)
    if va <= 0.0 or vb <= 0.0:
        raise DegenerateCapacityError("zero variance")
    return min(1.0, float(ac @ bc) ** 2 / (va * vb))


def stm_model(eps, g):
    """Reset towards ``|0><0|`` at rate ``eps`` after a y rotation by ``g z``, ``z`` in [0, 1]."""
    outer = reset_rate(eps, state("0"))
    return extract_sas(compose_family(outer, rotation_family("y", gain=g, lo=0.0, hi=1.0)))


def _realization(sas, config, seed_seq, lag=1):
    total = config.washout + config.n_train + config.n_test
    z = gen_uniform_inputs(total, 0.0, 1.0, np.random.default_rng(seed_seq))
    X = drive_reservoir(sas, z, config.washout)
    target = z[config.washout - lag : total - lag]
    tr = slice(0, config.n_train)
    te = slice(config.n_train, config.n_train + config.n_test)
    sol = ridge_fit(X[tr], target[tr], config.ridge)
    c_test = memory_capacity(target[te], sol.predict(X[te]))
    c_train = memory_capacity(target[tr], sol.predict(X[tr]))
    return c_test, c_train


def _mean_std(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def stm_task(eps, g, config=TaskConfig()):
    """One-step recall capacity averaged over independent realizations.

    Capacity is evaluated on the test segment; the training-segment value
    is kept alongside. Realization ``k`` always uses the ``k``-th child of
    the master seed, so results do not depend on execution order.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    sas = stm_model(eps, g)
    seeds = np.random.SeedSequence(config.seed).spawn(config.realizations)
    pairs = [_realization(sas, config, s) for s in seeds]
    test = np.array([p[0] for p in pairs])
    train = np.array([p[1] for p in pairs])
    mean, std = _mean_std(list(test))
    return CapacityResult(test, train, mean, std)


def default_g_grid():
    """40 log-spaced gains on [0.05, 8] plus exactly ``2 pi``."""
    return np.sort(np.append(np.geomspace(0.05, 8.0, 40), 2 * np.pi))


def _sweep_point(args):
    eps, g, config = args
    res = stm_task(eps, g, config)
    return (eps, g, res.mean, res.std, res.n_realizations)


def fig2_sweep(eps_list=FIG2_EPSILONS, g_grid=None, config=TaskConfig(), jobs=1):
    """Memory capacity over a grid of reset rates and input gains.

    Returns rows ``(epsilon, g, mean_C, std_C, n_realizations)`` ordered by
    epsilon, then gain.
    """
    g_grid = default_g_grid() if g_grid is None else np.asarray(g_grid, dtype=float)
    if len(eps_list) == 0 or len(g_grid) == 0:
        raise ValueError("grids must be nonempty")
    work = [(float(e), float(g), config) for e in eps_list for g in g_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_point, work))
    return [_sweep_point(w) for w in work]


def write_fig2_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FIG2_HEADER)
        for eps, g, mean, std, n in rows:
            w.writerow([repr(eps), repr(g), repr(mean), repr(std), n])
