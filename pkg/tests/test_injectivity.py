import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TWO_PI, damped_hadamard, periodic, reset_dephasing, reset_depolarizing, ry
from qrcsas import injectivity as inj
from qrcsas import linalg
from qrcsas import quantum as qm
from qrcsas import sas
from qrcsas.errors import EspViolationError, NoFixedPointError, NonFiniteError

R2 = math.sqrt(2)


def dry(z):
    c, s = math.cos(z), math.sin(z)
    return np.array([[-s, 0, -c], [0, 0, 0], [c, 0, -s]])


def periodic_rank_vector(eps, z):
    """Closed-form condition vector of the periodic reservoir at its constant-input fixed point.

    With a = 1 - eps the fixed point solves (I - a R(z)) x = eps e3 / sqrt(2),
    and the condition vector is a R'(z) x. Solving the 2x2 block by hand
    gives x1 = -a eps s / (sqrt(2) D) and x3 = eps (1 - a c) / (sqrt(2) D)
    with D = 1 - 2 a c + a^2.
    """
    a = 1 - eps
    c, s = math.cos(z), math.sin(z)
    den = 1 - 2 * a * c + a * a
    x = np.array([-a * eps * s, 0.0, eps * (1 - a * c)]) / (R2 * den)
    return a * dry(z) @ x


class TestFrechet:
    def test_rotation_at_zero(self):
        b = inj.frechet_pq(sas.extract_sas(qm.rotation_family("y", lo=-1, hi=1)), 0.0)
        np.testing.assert_allclose(b.Dp[0], [[0, 0, -1], [0, 0, 0], [1, 0, 0]], atol=1e-9)
        np.testing.assert_allclose(b.Dq, 0, atol=1e-9)
        assert b.h[0] == 1e-6

    @pytest.mark.parametrize("z", [0.0, 0.4, 1.9, 3.0, TWO_PI])
    def test_rotation_matches_analytic(self, z):
        m = sas.extract_sas(qm.rotation_family("y"))
        b = inj.frechet_pq(m, z)
        assert np.max(np.abs(b.Dp[0] - dry(z))) < 1e-6
        br = inj.frechet_pq(m, z, h=1e-5, richardson=True)
        assert np.max(np.abs(br.Dp[0] - dry(z))) < 1e-8

    def test_constant_family(self):
        m = sas.extract_sas(qm.constant_family(qm.amplitude_damping(0.3)))
        b = inj.frechet_pq(m, 0.5)
        assert np.max(np.abs(b.Dp)) == 0 and np.max(np.abs(b.Dq)) == 0

    @pytest.mark.parametrize("z", [0.0, 0.5, 1.0])
    def test_depolarizing_including_boundary(self, z):
        b = inj.frechet_pq(sas.extract_sas(qm.depolarizing_family()), z)
        np.testing.assert_allclose(b.Dp[0], np.eye(3), atol=1e-9)

    def test_two_inputs(self):
        fam = qm.ParamChannel(
            2,
            [0, 0],
            [1, 1],
            lambda z: qm.compose(qm.rotation("x", z[1]), qm.rotation("y", 2 * z[0])),
        )
        b = inj.frechet_pq(sas.extract_sas(fam), [0.0, 0.0])
        np.testing.assert_allclose(b.Dp[0], 2 * dry(0.0), atol=1e-8)
        assert b.Dq.shape == (3, 2)

    def test_non_finite(self):
        m = sas.closed_form_sas(lambda z: np.full((3, 3), np.nan), lambda z: np.zeros(3), 3, 0, 1)
        with pytest.raises(NonFiniteError) as info:
            inj.frechet_pq(m, 0.5)
        assert info.value.coordinate == 0


class TestRankCondition:
    @pytest.mark.parametrize("z", [0.0, 0.3, 1.0])
    def test_reset_depolarizing(self, z):
        eps = 0.5
        x = np.array([0, 0, 1.0])
        r = inj.rank_condition(reset_depolarizing(eps), z, x)
        np.testing.assert_allclose(r.M[:, 0], (1 - eps) * x, atol=1e-9)
        assert r.rank == 1 and r.passed

    def test_zero_state_without_offset(self):
        r = inj.rank_condition(sas.extract_sas(qm.rotation_family("y")), 0.7, np.zeros(3))
        assert r.rank == 0 and not r.passed

    @pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("z", [0.0, 0.8, 2.0, 4.0])
    def test_periodic_at_fixed_point(self, eps, z):
        r = inj.local_injectivity_at_constant(periodic(eps, lo=-1, hi=7), z)
        assert np.max(np.abs(r.M[:, 0] - periodic_rank_vector(eps, z))) < 1e-8
        assert r.passed

    def test_periodic_frozen_value(self):
        # eps = 1/2, z = 0: -(1 - eps) / sqrt(2) along the first axis
        r = inj.local_injectivity_at_constant(periodic(0.5, lo=-1, hi=7), 0.0)
        np.testing.assert_allclose(r.M[:, 0], [-0.35355339059327373, 0, 0], atol=1e-9)

    def test_linear_in_state(self, rng):
        m = periodic(0.3, lo=-1, hi=7)
        b = inj.frechet_pq(m, 1.1)
        x1, x2 = rng.normal(size=3), rng.normal(size=3)
        lin = lambda x: inj.condition_matrix(b, x) - b.Dq
        assert np.max(np.abs(lin(2 * x1 - 3 * x2) - (2 * lin(x1) - 3 * lin(x2)))) < 1e-9

    def test_contracted_factorization(self, rng):
        outer = qm.compose(qm.amplitude_damping(0.35), qm.rotation("x", 0.6))
        enc = qm.compose_family(qm.dephasing(0.7), qm.rotation_family("y", 1.0, -1, 7))
        whole = sas.extract_sas(qm.compose_family(outer, enc))
        inner = sas.extract_sas(enc)
        p_e, _ = sas.split_superop(sas.extract_superop(outer, sas.gell_mann_basis(2)), 2)
        for z in [0.2, 1.5, 3.3]:
            x = rng.normal(size=3) * 0.4
            lhs = inj.rank_condition(whole, z, x).M
            bj = inj.frechet_pq(inner, z)
            assert np.max(np.abs(bj.Dq)) < 1e-9  # unital encoding
            assert np.max(np.abs(lhs - p_e @ inj.condition_matrix(bj, x))) < 1e-8

    def test_invertible_outer_preserves_rank(self, rng):
        outer = qm.reset_rate(0.4, qm.state("-"))
        for fam in [qm.rotation_family("z", 1.0, -1, 7), qm.depolarizing_family()]:
            whole = sas.extract_sas(qm.compose_family(outer, fam))
            inner = sas.extract_sas(fam)
            for z in [0.25, 0.5]:
                for x in [np.zeros(3), rng.normal(size=3), np.array([0, 0, 0.3])]:
                    assert inj.rank_condition(whole, z, x).rank == inj.rank_condition(inner, z, x).rank


class TestReachable:
    def test_constant_filter_collapses(self):
        outer, enc = damped_hadamard()
        m = sas.extract_sas(qm.compose_family(outer, enc))
        xs = inj.reachable_sample(m, 30, seed=1)
        assert np.max(np.abs(xs - xs[0])) < 1e-8

    def test_bloch_ball(self):
        xs = inj.reachable_sample(periodic(0.5), 200, seed=2)
        assert np.max(np.linalg.norm(xs, axis=1)) <= 1 / R2 + 1e-9

    def test_seeded(self):
        m = periodic(0.5)
        np.testing.assert_array_equal(inj.reachable_sample(m, 5, seed=9), inj.reachable_sample(m, 5, seed=9))

    def test_requires_contraction(self):
        with pytest.raises(EspViolationError):
            inj.reachable_sample(sas.extract_sas(qm.rotation_family("y")), 3)


class TestScans:
    def test_reset_depolarizing_passes(self):
        m = reset_depolarizing(0.5)
        xs = inj.reachable_sample(m, 40, seed=3)
        scan = inj.global_injectivity_scan(m, sas.domain_grid(0, 1, 21), xs)
        assert scan.passed and scan.verdict == "certified-on-samples"
        assert scan.min_singular_value > 0.1
        assert len(scan.reports) == 21 * 40

    def test_unitary_with_zero_state(self):
        m = sas.extract_sas(qm.rotation_family("x"))
        xs = np.array([[0.1, 0.2, 0.3], [0.0, 0.0, 0.0]])
        scan = inj.global_injectivity_scan(m, [0.5, 1.0], xs)
        assert not scan.passed
        assert all(np.all(x == 0) for _, x in scan.witnesses)

    def test_quadratic_drive_at_zero(self):
        m = sas.extract_sas(qm.lindblad_family(qm.LindbladModel(1.0, encoding="quadratic")))
        xs = inj.reachable_sample(m, 5, seed=0)
        scan = inj.global_injectivity_scan(m, [-0.5, 0.0, 0.5], xs)
        assert {float(z[0]) for z, _ in scan.witnesses} == {0.0}

    def test_empty_inputs(self):
        with pytest.raises(ValueError):
            inj.global_injectivity_scan(periodic(), np.zeros((0, 1)), np.zeros((1, 3)))


class TestLocal:
    @pytest.mark.parametrize("z0", [0.0, 1.0, math.pi, 5.0])
    def test_periodic_full_rank(self, z0):
        assert inj.local_injectivity_at_constant(periodic(0.3), z0).passed

    def test_lindblad(self):
        m = sas.extract_sas(qm.lindblad_family(qm.LindbladModel(1.0)))
        r = inj.local_injectivity_at_constant(m, 1.0)
        assert r.passed and r.norm > 1e-6

    def test_no_contraction(self):
        with pytest.raises(NoFixedPointError):
            inj.local_injectivity_at_constant(sas.extract_sas(qm.rotation_family("y")), 0.4)


class TestPreimage:
    def test_periodic_endpoints(self):
        m = periodic(0.5)
        grid = sas.domain_grid(0, TWO_PI, 101)
        pre = inj.preimage_constant_output(m, sas.fixed_point(m, 0.0), grid)
        np.testing.assert_allclose(pre.representatives[:, 0], [0.0, TWO_PI])
        assert pre.sequence_deviation < 1e-7

    def test_injective_fixed_point_map(self):
        m = reset_depolarizing(0.5)
        grid = sas.domain_grid(0, 1, 101)
        pre = inj.preimage_constant_output(m, sas.fixed_point(m, grid[37]), grid)
        assert len(pre.clusters) == 1 and len(pre.points) == 1
        assert pre.representatives[0, 0] == pytest.approx(0.37)

    def test_adjacent_hits_merge(self):
        m = sas.extract_sas(qm.constant_family(qm.reset_rate(0.5, qm.state("0")), 0, 1))
        grid = sas.domain_grid(0, 1, 11)
        pre = inj.preimage_constant_output(m, sas.fixed_point(m, 0.0), grid)
        assert len(pre.points) == 11 and len(pre.clusters) == 1

    def test_empty(self):
        m = periodic(0.5)
        pre = inj.preimage_constant_output(m, np.array([0.3, 0.3, 0.3]), sas.domain_grid(0, TWO_PI, 11))
        assert pre.empty and pre.sequence_deviation is None


class TestConstantFilter:
    def test_damped_hadamard(self):
        theta = math.pi / 3
        outer, enc = damped_hadamard(theta)
        rep = inj.constant_filter_check(qm.compose_family(outer, enc), split=inj.ContractedEncoding(outer, enc))
        s, c = math.sin(theta), math.cos(theta)
        f = 3 + 2 * c + math.cos(2 * theta) + math.sin(2 * theta)
        a = (1 + 2 * c + math.cos(2 * theta)) / f
        b = 1 + (2 * s - 2) / f
        assert rep.verdict == "constant"
        assert np.max(np.abs(rep.rho_T - 0.5 * np.array([[1, s], [s, 1]]))) < 1e-8
        assert np.max(np.abs(rep.rho_prime - 0.5 * np.diag([1 + s, 1 - s]))) < 1e-8
        assert np.max(np.abs(rep.rho_E - 0.5 * np.array([[1 + a, b], [b, 1 - a]]))) < 1e-8
        assert rep.rho_prime_defect < 1e-10
        # rho_T does not commute with the encoding unitaries here
        assert rep.commutator_residual > 0.1

    def test_reset_dephasing(self):
        outer, enc = reset_dephasing()
        rep = inj.constant_filter_check(qm.compose_family(outer, enc), split=inj.ContractedEncoding(outer, enc))
        assert rep.constant
        np.testing.assert_allclose(rep.rho_T, [[1 / 2, 1 / 3], [1 / 3, 1 / 2]], atol=1e-8)
        np.testing.assert_allclose(rep.rho_prime, [[1 / 2, 1 / 6], [1 / 6, 1 / 2]], atol=1e-8)
        np.testing.assert_allclose(rep.rho_E, 0.5 * np.ones((2, 2)), atol=1e-8)
        assert linalg.trace_norm(rep.rho_prime - rep.rho_E) > 0.1
        assert linalg.trace_norm(rep.rho_E - rep.rho_T) > 0.1
        assert rep.commutator_residual is None

    def test_lindblad_input_dependent(self):
        m = sas.extract_sas(qm.lindblad_family(qm.LindbladModel(1.0)))
        rep = inj.constant_filter_check(m)
        assert rep.verdict == "input-dependent" and rep.deviation > 0.1
        assert rep.collapse_spread > 1e-3

    @pytest.mark.parametrize(
        "model, constant",
        [
            (periodic(0.5), False),
            (reset_depolarizing(0.5), False),
            (sas.extract_sas(qm.compose_family(*damped_hadamard())), True),
            (sas.extract_sas(qm.compose_family(*reset_dephasing())), True),
        ],
    )
    def test_verdict_matches_trajectories(self, model, constant):
        rep = inj.constant_filter_check(model)
        assert rep.constant == constant
        assert (rep.collapse_spread < 1e-7) == constant


class TestSufficiency:
    def test_commuting_case(self):
        outer = qm.reset_rate(0.3, qm.state("0"))
        enc = qm.rotation_family("z")
        grid = np.linspace(0, TWO_PI, 31)
        rep = inj.fixed_state_invariance_check(outer, enc, grid)
        assert rep.holds
        assert inj.constant_filter_check(qm.compose_family(outer, enc)).constant

    @pytest.mark.parametrize("example", [damped_hadamard, reset_dephasing])
    def test_not_necessary(self, example):
        outer, enc = example()
        grid = np.linspace(0, TWO_PI, 101)
        rep = inj.fixed_state_invariance_check(outer, enc, grid)
        assert not rep.holds and rep.defect > 1e-3
        assert inj.constant_filter_check(qm.compose_family(outer, enc)).constant

    def test_requires_strict_contraction(self):
        with pytest.raises(ValueError):
            inj.fixed_state_invariance_check(qm.hadamard(), qm.rotation_family("z"), [0.0])


class TestCounterexample:
    def test_periodic_shift(self):
        m = periodic(0.5, gain=TWO_PI, lo=0, hi=1)
        res = inj.counterexample_search(m, inj.shifted_pairs(0, 1, 1.0), tol_in=0.5, trials=1000)
        assert res.found and res.trials == 1
        assert res.input_gap == pytest.approx(1.0)
        assert res.output_gap < 1e-10

    def test_none_for_injective_reservoir(self):
        m = reset_depolarizing(0.5)
        res = inj.counterexample_search(m, inj.random_pairs(0, 1), tol_in=0.05, trials=10_000, seq_len=20)
        assert not res.found and res.trials == 10_000
        assert res.smallest_output_gap > 1e-3

    def test_identical_rejected(self):
        with pytest.raises(ValueError):
            inj.counterexample_search(periodic(0.5), inj.identical_pairs(0, 1), tol_in=0.1, trials=10)


class TestFig1:
    def test_small_grid(self, tmp_path):
        gammas = np.array([0.5, 1.0, 2.0])
        zs = np.array([-1.0, 0.25, 1.0])
        res = inj.fig1_scan(gammas, zs)
        assert res.norm.shape == (3, 3)
        assert np.max(res.residual) < 1e-8
        assert not res.failed.any()
        # gamma = 1, z = 0.25 lies on gamma^2 = 16 z^2
        assert res.near_singular[1, 1]
        off = ~res.near_singular
        assert np.all(res.norm[off] > 1e-8)
        res.write_csv(tmp_path / "f.csv")
        with open(tmp_path / "f.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["z", "gamma", "norm", "rank", "min_singular_value", "residual", "near_singular"]
        assert len(rows) == 10

    def test_quadratic_vanishes_at_zero(self):
        res = inj.fig1_scan([0.5, 1.0, 2.0], [0.0], encoding="quadratic")
        assert np.max(res.norm) < 1e-10
        assert np.all(res.rank == 0)

    def test_parallel_matches_serial(self):
        kw = dict(gammas=[0.3, 1.2], zs=[-0.5, 0.7])
        a = inj.fig1_scan(**kw)
        b = inj.fig1_scan(**kw, jobs=2)
        np.testing.assert_array_equal(a.norm, b.norm)

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(ValueError):
            inj.fig1_scan([0.0, 1.0], [0.0])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-3, 9))
def test_periodic_condition_never_vanishes(eps, z):
    m = periodic(eps, lo=-4, hi=10)
    r = inj.local_injectivity_at_constant(m, z)
    assert r.passed
    np.testing.assert_allclose(r.M[:, 0], periodic_rank_vector(eps, z), atol=1e-8)
