import csv
import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ry
from qrcsas import sas
from qrcsas import tasks
from qrcsas.errors import DegenerateCapacityError

SMALL = tasks.TaskConfig(washout=50, n_train=300, n_test=300, realizations=4, seed=7)


def kraus_trajectory(eps, g, inputs):
    """Density matrices from explicit Kraus maps, starting at the maximally mixed state."""
    rho = np.eye(2) / 2
    ground = np.diag([1.0, 0.0])
    out = []
    for z in inputs:
        th = g * z
        u = np.array([[math.cos(th / 2), -math.sin(th / 2)], [math.sin(th / 2), math.cos(th / 2)]])
        rho = (1 - eps) * u @ rho @ u.T + eps * ground
        out.append(rho)
    return out


class TestInputs:
    def test_seeded(self):
        np.testing.assert_array_equal(tasks.gen_uniform_inputs(10, seed=3), tasks.gen_uniform_inputs(10, seed=3))

    def test_range_and_mean(self):
        z = tasks.gen_uniform_inputs(100_000, -1.0, 3.0, seed=1)
        assert z.min() >= -1 and z.max() <= 3
        assert abs(z.mean() - 1.0) < 0.02

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            tasks.gen_uniform_inputs(5, 1.0, 1.0)


class TestReservoir:
    def test_closed_form_blocks(self):
        eps, g = 0.3, 2.0
        m = tasks.stm_model(eps, g)
        for z in [0.0, 0.4, 1.0]:
            np.testing.assert_allclose(m.p(z), (1 - eps) * ry(g * z), atol=1e-12)
            np.testing.assert_allclose(m.q(z), [0, 0, eps / math.sqrt(2)], atol=1e-12)

    def test_states_match_kraus_evolution(self):
        eps, g = 0.25, 1.7
        z = tasks.gen_uniform_inputs(60, seed=4)
        X = tasks.drive_reservoir(tasks.stm_model(eps, g), z, 10)
        rhos = kraus_trajectory(eps, g, z)[10:]
        basis = sas.gell_mann_basis(2)
        assert X.shape == (50, 3)
        for x, rho in zip(X, rhos):
            assert np.max(np.abs(sas.from_bloch(x, basis) - rho)) < 1e-12

    def test_full_reset_limit(self):
        X = tasks.drive_reservoir(tasks.stm_model(1 - 1e-12, 3.0), tasks.gen_uniform_inputs(20, seed=0), 0)
        np.testing.assert_allclose(X, np.tile([0, 0, 1 / math.sqrt(2)], (20, 1)), atol=1e-11)

    def test_initial_state_forgotten(self):
        eps = 0.2
        m = tasks.stm_model(eps, 1.0)
        z = tasks.gen_uniform_inputs(200, seed=5)
        a = sas.filter_eval(m, z)
        b = sas.filter_eval(m, z, x0=np.array([0.5, 0.2, -0.4]))
        assert np.max(np.abs(a[-1] - b[-1])) < (1 - eps) ** 200

    def test_negative_washout(self):
        with pytest.raises(ValueError):
            tasks.drive_reservoir(tasks.stm_model(0.5, 1.0), np.zeros(3), -1)


class TestRidge:
    def test_recovers_noiseless(self, rng):
        X = rng.normal(size=(200, 3))
        w, b = np.array([0.5, -2.0, 1.25]), 0.75
        sol = tasks.ridge_fit(X, X @ w + b, 0.0)
        np.testing.assert_allclose(sol.w, w, atol=1e-10)
        assert sol.b == pytest.approx(b, abs=1e-10)

    @pytest.mark.parametrize("lam", [0.0, 1e-3, 1.0, 50.0])
    def test_matches_augmented_least_squares(self, lam, rng):
        X = rng.normal(size=(80, 3))
        y = rng.normal(size=80)
        xc, yc = X - X.mean(0), y - y.mean()
        A = np.vstack([xc, math.sqrt(lam) * np.eye(3)])
        rhs = np.concatenate([yc, np.zeros(3)])
        w_ref = np.linalg.lstsq(A, rhs, rcond=None)[0]
        sol = tasks.ridge_fit(X, y, lam)
        np.testing.assert_allclose(sol.w, w_ref, atol=1e-10)
        assert sol.b == pytest.approx(float(np.mean(y - X @ w_ref)), abs=1e-10)

    def test_objective_is_minimal(self, rng):
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        lam = 0.3

        def loss(w, b):
            r = y - X @ w - b
            return r @ r + lam * w @ w

        sol = tasks.ridge_fit(X, y, lam)
        best = loss(sol.w, sol.b)
        for _ in range(20):
            dw, db = rng.normal(size=3) * 1e-3, rng.normal() * 1e-3
            assert loss(sol.w + dw, sol.b + db) >= best

    def test_constant_target(self, rng):
        sol = tasks.ridge_fit(rng.normal(size=(30, 2)), np.full(30, 4.0), 1e-8)
        np.testing.assert_allclose(sol.w, 0, atol=1e-12)
        assert sol.b == pytest.approx(4.0)

    def test_heavy_shrinkage(self, rng):
        X = rng.normal(size=(40, 2))
        y = X @ [1.0, 2.0] + 3.0
        sol = tasks.ridge_fit(X, y, 1e12)
        assert np.max(np.abs(sol.w)) < 1e-8
        assert sol.b == pytest.approx(y.mean() - X.mean(0) @ sol.w)

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            tasks.ridge_fit(np.zeros((3, 2)), np.zeros(4), 0.1)
        with pytest.raises(ValueError):
            tasks.ridge_fit(np.zeros((3, 2)), np.zeros(3), -1.0)


class TestCapacity:
    def test_matches_corrcoef(self, rng):
        a, b = rng.normal(size=100), rng.normal(size=100)
        assert tasks.memory_capacity(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1] ** 2, abs=1e-12)

    def test_perfect(self):
        a = np.arange(10.0)
        assert tasks.memory_capacity(a, -3 * a + 1) == pytest.approx(1.0)

    def test_independent_noise(self):
        r = np.random.default_rng(0)
        assert tasks.memory_capacity(r.random(100_000), r.random(100_000)) < 0.01

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-5, 5).filter(lambda s: abs(s) > 1e-3), st.floats(-10, 10), st.integers(0, 10_000))
    def test_affine_invariant_and_bounded(self, scale, shift, seed):
        r = np.random.default_rng(seed)
        a = r.normal(size=30)
        b = a + r.normal(size=30)
        c = tasks.memory_capacity(a, b)
        assert 0.0 <= c <= 1.0
        assert tasks.memory_capacity(a, scale * b + shift) == pytest.approx(c, abs=1e-9)

    def test_degenerate(self):
        with pytest.raises(DegenerateCapacityError):
            tasks.memory_capacity(np.ones(5), np.arange(5.0))


class TestStm:
    def test_seeded(self):
        a = tasks.stm_task(0.5, 1.0, SMALL)
        b = tasks.stm_task(0.5, 1.0, SMALL)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.n_realizations == 4

    def test_sample_std(self):
        res = tasks.stm_task(0.5, 1.0, SMALL)
        assert res.mean == pytest.approx(statistics.fmean(res.values), abs=1e-15)
        assert res.std == pytest.approx(statistics.stdev(res.values), abs=1e-15)

    def test_realizations_are_prefix_stable(self):
        more = tasks.stm_task(0.5, 1.0, tasks.TaskConfig(50, 300, 300, realizations=6, seed=7))
        np.testing.assert_array_equal(more.values[:4], tasks.stm_task(0.5, 1.0, SMALL).values)

    def test_capacity_in_range(self):
        res = tasks.stm_task(0.2, 1.0, SMALL)
        assert np.all((res.values >= 0) & (res.values <= 1))
        assert np.all(res.train_values >= 0)

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
    def test_rate_bounds(self, eps):
        with pytest.raises(ValueError):
            tasks.stm_task(eps, 1.0, SMALL)

    def test_fast_config(self):
        assert tasks.TaskConfig().fast().realizations == 10
        with pytest.raises(ValueError):
            tasks.TaskConfig(n_train=0)


class TestFig2:
    def test_default_grid(self):
        g = tasks.default_g_grid()
        assert len(g) == 41 and g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(8.0)
        assert 2 * np.pi in g

    def test_sweep_and_csv(self, tmp_path):
        rows = tasks.fig2_sweep([0.2, 0.8], [0.5, 2.0], SMALL)
        assert [(r[0], r[1]) for r in rows] == [(0.2, 0.5), (0.2, 2.0), (0.8, 0.5), (0.8, 2.0)]
        assert rows == tasks.fig2_sweep([0.2, 0.8], [0.5, 2.0], SMALL, jobs=2)
        path = tmp_path / "fig2.csv"
        tasks.write_fig2_csv(rows, path)
        with open(path) as fh:
            data = list(csv.reader(fh))
        assert data[0] == ["epsilon", "g", "mean_C", "std_C", "n_realizations"]
        assert float(data[1][2]) == rows[0][2]
        assert data[1][4] == "4"
