import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import orthogonal_procrustes
from scipy.spatial.transform import Rotation

from pebo_attitude import so3
from pebo_attitude.observability import (
    ConditionReport,
    RegressorBatch,
    check_distinguishability,
    check_distinguishability_modified,
    check_excitation,
    check_three_moment,
    check_trumpf,
    default_grid,
    wahba_solve,
)
from pebo_attitude.observers import Observer2
from pebo_attitude.sim import OmegaSignal, ReferenceSignal, example1_reference

E1, E2, E3 = np.eye(3)
STILL = OmegaSignal.constant([0.0, 0.0, 0.0])
SPIN_Z = OmegaSignal.constant([0.0, 0.0, 1.0])


def test_default_grid():
    grid = default_grid(60.0, 1e-3)
    assert grid.size <= 2000
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(60.0)
    np.testing.assert_allclose(default_grid(1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_report_rejects_unknown_id():
    with pytest.raises(ValueError):
        ConditionReport("made-up", True, 1.0, 1e-6)


class TestDistinguishability:
    def test_constant_g_not_satisfied(self):
        r = check_distinguishability([ReferenceSignal.constant(E3)], [], SPIN_Z, np.eye(3), default_grid(10.0))
        assert not r.satisfied
        assert r.margin == pytest.approx(0.0, abs=1e-15)
        assert r.condition_id == "single-vector"

    def test_example1_switch(self):
        r = check_distinguishability([example1_reference()], [], SPIN_Z, np.eye(3), default_grid(10.0), 0.5)
        assert r.satisfied
        assert r.margin == pytest.approx(1.0)
        t1, t2 = sorted(r.witness_times)
        assert t1 < 5.0 <= t2
        assert 0.0 <= t1 and t2 <= 10.0

    def test_constant_b_under_rotation(self):
        grid = np.linspace(0.0, math.pi, 401)
        r = check_distinguishability([], [ReferenceSignal.constant(E1)], SPIN_Z, np.eye(3), grid)
        assert r.satisfied
        assert r.margin == pytest.approx(1.0, abs=1e-9)
        t1, t2 = r.witness_times
        # oracle: Phi(0, t) = exp(t e3^); the witness pair is a quarter turn apart
        c1 = Rotation.from_rotvec(t1 * E3).apply(E1)
        c2 = Rotation.from_rotvec(t2 * E3).apply(E1)
        assert np.linalg.norm(np.cross(c1, c2)) == pytest.approx(r.margin, abs=1e-9)

    def test_constant_b_without_rotation(self):
        r = check_distinguishability([], [ReferenceSignal.constant(E1)], STILL, np.eye(3), np.linspace(0, 2, 50))
        assert not r.satisfied

    def test_pair_symmetry(self):
        g = ReferenceSignal.cone(0.7, 1.3)
        grid = np.linspace(0.0, 3.0, 61)
        r = check_distinguishability([g], [], STILL, np.eye(3), grid)
        a, b = g(np.array(r.witness_times))
        assert np.linalg.norm(np.cross(a, b)) == pytest.approx(r.margin, abs=1e-12)
        assert np.linalg.norm(np.cross(b, a)) == pytest.approx(r.margin, abs=1e-12)

    def test_matches_brute_force(self):
        g = ReferenceSignal.cone(0.4, 2.0)
        grid = np.linspace(0.0, 1.0, 23)
        r = check_distinguishability([g], [], STILL, np.eye(3), grid)
        v = g(grid)
        brute = max(np.linalg.norm(np.cross(v[i], v[j])) for i in range(23) for j in range(23))
        assert r.margin == pytest.approx(brute, abs=1e-14)

    def test_no_measurements(self):
        with pytest.raises(ValueError, match="no measurements declared"):
            check_distinguishability([], [], STILL, np.eye(3), [0.0, 1.0])

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            check_distinguishability([ReferenceSignal.constant(E1)], [], STILL, np.eye(3), [0.0], threshold=0.0)


class TestModified:
    g = [ReferenceSignal.constant(E3)]
    b = [ReferenceSignal.constant(E1)]
    grid = np.linspace(0.0, 1.0, 11)

    def test_pure_complementary_same_verdict(self):
        for g in (ReferenceSignal.constant(E1), example1_reference()):
            grid = default_grid(10.0)
            full = check_distinguishability([g], [], SPIN_Z, np.eye(3), grid)
            mod = check_distinguishability_modified([g], [], SPIN_Z, grid)
            assert full.satisfied == mod.satisfied
            assert full.margin == pytest.approx(mod.margin)

    def test_aligned_instance(self):
        # R0 maps the body vector onto the inertial one
        R0 = so3.exp_so3(-math.pi / 2 * E2)
        np.testing.assert_allclose(R0 @ E1, E3, atol=1e-15)
        full = check_distinguishability(self.g, self.b, STILL, R0, self.grid)
        mod = check_distinguishability_modified(self.g, self.b, STILL, self.grid)
        assert not full.satisfied
        assert mod.satisfied and mod.margin == pytest.approx(1.0)
        assert full.note.startswith("diagnostic")

    def test_random_initial_attitudes_pass(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            r = check_distinguishability(self.g, self.b, STILL, so3.random_rotation(rng), self.grid[:2])
            assert r.satisfied


class TestThreeMoment:
    def test_example1_is_planar(self):
        r = check_three_moment(example1_reference(), default_grid(20.0, max_points=100))
        assert not r.satisfied

    def test_cone_spans(self):
        half = 0.5
        r = check_three_moment(ReferenceSignal.cone(half, 1.0), np.linspace(0, 2 * math.pi, 61))
        assert r.satisfied
        # three equally spaced cone points maximise the determinant
        expected = 3 * math.sqrt(3) / 2 * math.sin(half) ** 2 * math.cos(half)
        assert r.margin == pytest.approx(expected, rel=1e-3)
        assert len(r.witness_times) == 3


class TestTrumpf:
    def test_constant_g(self):
        r = check_trumpf([ReferenceSignal.constant(E1)], [], STILL, 10.0)
        assert not r.satisfied
        assert r.margin == pytest.approx(0.0, abs=1e-9)

    def test_example1(self):
        r = check_trumpf([example1_reference()], [], SPIN_Z, 10.0)
        assert r.satisfied
        assert r.margin == pytest.approx(5.0, abs=1e-9)
        assert "lambda2=5" in r.note

    def test_constant_b_quarter_turn(self):
        T = math.pi / 2
        r = check_trumpf([], [ReferenceSignal.constant(E1)], SPIN_Z, T)
        # oracle: quadrature of omega x b for each component
        drift = np.array([quad(lambda t, k=k: np.cross(E3, E1)[k], 0.0, T)[0] for k in range(3)])
        assert r.satisfied
        assert r.margin == pytest.approx(np.linalg.norm(drift), rel=1e-9)

    def test_jump_carries_no_drift(self):
        # a sign flip keeps the direction collinear, so the jump must not count
        flip = ReferenceSignal.piecewise_constant([1.0], [E1, -E1])
        r = check_trumpf([], [flip], STILL, 2.0)
        assert not r.satisfied
        assert not check_distinguishability([], [flip], STILL, np.eye(3), np.linspace(0, 2, 41)).satisfied

    def test_numeric_derivative_matches_analytic(self):
        cone = ReferenceSignal.cone(0.6, 0.8)
        numeric = ReferenceSignal.smooth(cone.fn)
        omega = OmegaSignal.constant([0.1, -0.2, 0.3])
        a = check_trumpf([], [cone], omega, 3.0)
        b = check_trumpf([], [numeric], omega, 3.0)
        assert b.margin == pytest.approx(a.margin, rel=1e-6)

    def test_missing_derivative(self):
        sig = ReferenceSignal.smooth(ReferenceSignal.cone(0.6, 0.8).fn)
        with pytest.raises(ValueError, match="no derivative"):
            check_trumpf([], [sig], STILL, 1.0, numeric_derivatives=False)

    def test_errors(self):
        with pytest.raises(ValueError, match="no measurements declared"):
            check_trumpf([], [], STILL, 1.0)
        with pytest.raises(ValueError):
            check_trumpf([ReferenceSignal.constant(E1)], [], STILL, 0.0)


class TestExcitation:
    def test_constant_vector_rank_one(self):
        t = np.linspace(0, 5, 501)
        r = check_excitation(np.tile(E1, (t.size, 1)), t, "IE")
        assert r.delta == pytest.approx(0.0, abs=1e-12)
        assert not r.excited

    def test_example1_planar(self):
        t = np.linspace(0, 10, 10001)
        r = check_excitation(example1_reference()(t), t, "IE")
        assert r.delta == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("T", [0.5, 2.0, 7.3])
    def test_identity_pe(self, T):
        t = np.linspace(0, 10, 1001)
        r = check_excitation(np.tile(np.eye(3), (t.size, 1, 1)), t, "PE", T)
        assert r.kind == "PE" and r.window_T == T
        assert r.delta == pytest.approx(T, rel=1e-9)

    def test_filter_regressor_is_pe(self):
        dt, n = 1e-2, 2001
        cone = ReferenceSignal.cone(0.8, 1.0)
        t = np.arange(n) * dt
        b = cone(t)
        obs = Observer2()
        phi = np.empty((n, 3, 3))
        for k in range(n):
            phi[k] = np.eye(3) - obs.Omega.T
            obs.update(b[k], b[k], dt)
        r = check_excitation(phi, t, "PE", 5.0, threshold=1e-3)
        assert r.excited

    def test_window_exceeds_horizon(self):
        t = np.linspace(0, 1, 11)
        with pytest.raises(ValueError, match="exceeds"):
            check_excitation(np.tile(E1, (11, 1)), t, "PE", 2.0)

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            check_excitation(np.tile(E1, (3, 1)), [0, 1, 2], "XE")


def _batch(R0, phi, noise=0.0, rng=None):
    phi = phi / np.linalg.norm(phi, axis=1, keepdims=True)
    Y = phi @ R0
    if noise:
        Y = Y + noise * rng.standard_normal(Y.shape)
    return RegressorBatch(np.arange(len(phi), dtype=float), Y, phi)


class TestWahba:
    def test_identity(self):
        R, res = wahba_solve(_batch(np.eye(3), np.array([E1, E3])))
        np.testing.assert_allclose(R, np.eye(3), atol=1e-15)
        assert res < 1e-18

    def test_half_turn(self):
        R0 = np.diag([-1.0, -1.0, 1.0])
        R, _ = wahba_solve(_batch(R0, np.array([E1, E3])))
        np.testing.assert_allclose(R, R0, atol=1e-12)

    def test_noisy(self):
        rng = np.random.default_rng(1)
        R0 = so3.random_rotation(rng)
        R, _ = wahba_solve(_batch(R0, rng.standard_normal((100, 3)), 0.01, rng))
        assert so3.angle_between(R, R0) < 0.01

    def test_collinear(self):
        with pytest.raises(ValueError, match="attitude not determined"):
            wahba_solve(_batch(np.eye(3), np.array([E1, -E1, E1])))
        with pytest.raises(ValueError, match="attitude not determined"):
            wahba_solve(_batch(np.eye(3), np.array([E1])))

    def test_batch_validation(self):
        with pytest.raises(ValueError, match="unit"):
            RegressorBatch([0.0], [E1], [2 * E1])
        with pytest.raises(ValueError):
            RegressorBatch([0.0, 1.0], [E1], [E1])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_matches_procrustes(self, seed):
        rng = np.random.default_rng(seed)
        batch = _batch(so3.random_rotation(rng), rng.standard_normal((6, 3)), 0.1, rng)
        R, res = wahba_solve(batch)
        assert so3.is_rotation(R)
        # oracle: min |phi S - Y| over orthogonal S, then det check
        S, _ = orthogonal_procrustes(batch.phi, batch.Y)
        if np.linalg.det(S) > 0:
            np.testing.assert_allclose(R, S, atol=1e-9)
        assert res == pytest.approx(np.sum((batch.Y - batch.phi @ R) ** 2))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_exact_recovery_when_distinguishable(self, seed):
        rng = np.random.default_rng(seed)
        R0 = so3.random_rotation(rng)
        phi = rng.standard_normal((4, 3))
        batch = _batch(R0, phi)
        g = ReferenceSignal(lambda t: batch.phi[t.astype(int)], "tabulated")
        assert check_distinguishability([g], [], STILL, np.eye(3), batch.times).margin > 0
        R, res = wahba_solve(batch)
        np.testing.assert_allclose(R, R0, atol=1e-10)
        assert res < 1e-18

    def test_cost_monotone(self):
        rng = np.random.default_rng(2)
        R0 = so3.random_rotation(rng)
        noisy = _batch(R0, rng.standard_normal((5, 3)), 0.05, rng)
        _, before = wahba_solve(noisy)
        extra = _batch(R0, rng.standard_normal((1, 3)))
        _, after = wahba_solve(noisy.append(extra))
        assert after >= before - 1e-15
