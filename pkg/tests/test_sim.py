import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pebo_attitude import so3
from pebo_attitude.sim import (
    EXAMPLE1_OMEGA,
    EXAMPLE1_R0,
    MeasurementStream,
    NumericalError,
    OmegaSignal,
    ReferenceSignal,
    SensorConfig,
    degrade_stream,
    example1_reference,
    gyro_stream,
    integrate_attitude,
    integrate_rates,
    measure_compatible,
    measure_complementary,
    read_stream_csv,
    time_grid,
    transition_matrix,
    transitions_from_zero,
    vector_stream,
    write_stream_csv,
)

SINE = OmegaSignal.sinusoidal([0.4, -0.3, 0.6], [0.5, 0.8, 0.3], [0.0, 1.0, 2.0], [0.1, 0.0, -0.2])


def _ivp_transition(omega, s, t):
    # oracle: integrate Q' = Q omega_x with an adaptive RK solver
    def rhs(tt, q):
        return (q.reshape(3, 3) @ so3.skew(omega(tt))).ravel()

    sol = solve_ivp(rhs, (s, t), np.eye(3).ravel(), method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(3, 3)


class TestSignals:
    def test_constant_omega_broadcasts(self):
        w = OmegaSignal.constant([1.0, 2.0, 3.0])
        assert w(0.5).shape == (3,)
        assert w(np.arange(4.0)).shape == (4, 3)

    def test_piecewise_right_continuous(self):
        w = OmegaSignal.piecewise([1.0], [[0, 0, 0], [1, 1, 1]])
        np.testing.assert_array_equal(w(np.array([0.999, 1.0])), [[0, 0, 0], [1, 1, 1]])

    def test_example1_reference_switch(self):
        g = example1_reference()
        np.testing.assert_array_equal(g(np.array([0.0, 4.999, 5.0, 60.0])),
                                      [[1, 0, 0], [1, 0, 0], [0, 0, 1], [0, 0, 1]])
        # derivative on each piece; the jump carries no impulse
        np.testing.assert_array_equal(g.rate(np.array([1.0, 5.0])), np.zeros((2, 3)))
        with pytest.raises(ValueError, match="no analytic derivative"):
            ReferenceSignal.smooth(g.fn).rate(1.0)

    def test_cone_unit_and_derivative(self):
        c = ReferenceSignal.cone(0.7, 1.3, 0.2)
        t = np.linspace(0, 10, 101)
        np.testing.assert_allclose(np.linalg.norm(c(t), axis=1), 1.0, atol=1e-15)
        h = 1e-6
        np.testing.assert_allclose(c.rate(t), (c(t + h) - c(t - h)) / (2 * h), atol=1e-8)

    def test_tabulated(self):
        w = OmegaSignal.tabulated([0.0, 1.0], [[0, 0, 0], [2, 4, 6]])
        np.testing.assert_allclose(w(0.5), [1, 2, 3])

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            ReferenceSignal.constant([0.0, 0.0, 0.0])


class TestIntegration:
    def test_stationary(self):
        traj = integrate_attitude(np.eye(3), OmegaSignal.constant([0, 0, 0]), 1e-2, 1.0)
        np.testing.assert_array_equal(traj.rotations, np.broadcast_to(np.eye(3), traj.rotations.shape))

    def test_constant_omega_closed_form(self):
        traj = integrate_attitude(EXAMPLE1_R0, OmegaSignal.constant(EXAMPLE1_OMEGA), 1e-3, 10.0)
        expected = EXAMPLE1_R0 @ so3.exp_so3(10.0 * np.array(EXAMPLE1_OMEGA))
        np.testing.assert_allclose(traj.rotations[-1], expected, atol=1e-10)
        assert traj.horizon == pytest.approx(10.0)

    def test_order_two(self):
        ends = [integrate_attitude(np.eye(3), SINE, dt, 2.0).rotations[-1] for dt in (4e-2, 2e-2, 1e-2)]
        ref = integrate_attitude(np.eye(3), SINE, 1e-4, 2.0).rotations[-1]
        errs = [np.linalg.norm(e - ref) for e in ends]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(3.6 < r < 4.4 for r in ratios), ratios

    def test_rotations_valid(self):
        traj = integrate_attitude(so3.random_rotation(np.random.default_rng(0)), SINE, 1e-3, 20.0)
        err = np.linalg.norm(np.einsum("nki,nkj->nij", traj.rotations, traj.rotations) - np.eye(3), axis=(1, 2))
        assert err.max() < 1e-9

    def test_non_finite_omega(self):
        bad = OmegaSignal(lambda t: np.where(np.asarray(t)[..., None] > 0.5, np.nan, 0.0) * np.ones(3), "custom")
        with pytest.raises(NumericalError, match="t = 0.5"):
            integrate_attitude(np.eye(3), bad, 0.1, 1.0)

    @pytest.mark.parametrize("dt, horizon", [(0.0, 1.0), (-1.0, 1.0), (0.1, -1.0)])
    def test_bad_grid(self, dt, horizon):
        with pytest.raises(ValueError):
            time_grid(dt, horizon)

    def test_pebo_invariant_truth_level(self):
        # Q driven by the reported interval rates keeps Q R^T constant
        traj = integrate_attitude(EXAMPLE1_R0, SINE, 1e-3, 60.0)
        Q = integrate_rates(np.eye(3), traj.omegas, traj.dt)
        Qc = np.einsum("nij,nkj->nik", Q, traj.rotations)
        assert np.abs(Qc - Qc[0]).max() < 1e-6


class TestTransition:
    def test_identity_at_equal_times(self):
        np.testing.assert_array_equal(transition_matrix(SINE, 3.0, 3.0), np.eye(3))

    def test_constant_closed_form(self):
        w = OmegaSignal.constant([0.3, -0.2, 0.9])
        np.testing.assert_allclose(transition_matrix(w, 1.0, 3.5), so3.exp_so3(2.5 * np.array([0.3, -0.2, 0.9])),
                                   atol=1e-12)

    def test_against_ode_solver(self):
        np.testing.assert_allclose(transition_matrix(SINE, 0.5, 4.0), _ivp_transition(SINE, 0.5, 4.0), atol=1e-9)

    def test_cocycle_and_transpose(self):
        rng = np.random.default_rng(3)
        w = OmegaSignal.sinusoidal(rng.uniform(-1, 1, 3), rng.uniform(0.1, 1, 3), rng.uniform(0, 6, 3))
        P01, P12, P02 = (transition_matrix(w, a, b) for a, b in ((0, 1), (1, 2), (0, 2)))
        np.testing.assert_allclose(P01 @ P12, P02, atol=1e-9)
        np.testing.assert_allclose(transition_matrix(w, 2.0, 0.0), P02.T, atol=1e-15)

    def test_from_zero_grid(self):
        grid = np.array([0.0, 0.7, 1.3, 2.0])
        out = transitions_from_zero(SINE, grid)
        for k, t in enumerate(grid):
            np.testing.assert_allclose(out[k], transition_matrix(SINE, 0.0, t), atol=1e-12)


class TestSensors:
    noiseless = SensorConfig()

    @pytest.mark.parametrize(
        "R, g, expected",
        [(np.eye(3), [0, 0, 1], [0, 0, 1]), (np.diag([-1.0, -1.0, 1.0]), [1, 0, 0], [-1, 0, 0])],
    )
    def test_complementary_examples(self, R, g, expected):
        np.testing.assert_allclose(measure_complementary(R, g, self.noiseless), expected, atol=1e-15)

    @pytest.mark.parametrize(
        "R, b, expected",
        [(np.eye(3), [0, 1, 0], [0, 1, 0]), (so3.exp_so3([0, 0, math.pi / 2]), [1, 0, 0], [0, 1, 0])],
    )
    def test_compatible_examples(self, R, b, expected):
        np.testing.assert_allclose(measure_compatible(R, b, self.noiseless), expected, atol=1e-15)

    def test_duality(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            R, b = so3.random_rotation(rng), so3.random_unit_vector(rng)
            np.testing.assert_allclose(measure_compatible(R, b, self.noiseless),
                                       measure_complementary(R.T, b, self.noiseless), atol=1e-15)

    def test_noise_calibration(self):
        rng = np.random.default_rng(5)
        n = 100_000
        R = np.broadcast_to(np.eye(3), (n, 3, 3))
        g = np.tile([0.0, 0.0, 1.0], (n, 1))
        y = measure_complementary(R, g, SensorConfig(vector_noise_std=0.01), rng)
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-12)
        dev = np.arccos(np.clip(y[:, 2], -1, 1)).mean()
        assert 0.008 <= dev <= 0.016

    def test_noise_requires_rng(self):
        with pytest.raises(ValueError):
            measure_complementary(np.eye(3), [1, 0, 0], SensorConfig(vector_noise_std=0.1))

    @pytest.mark.parametrize(
        "kwargs",
        [{"vector_noise_std": -1}, {"delay_tau": -0.1}, {"sample_period_vector": 0.0}, {"accel_bias": (1, 2)}],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SensorConfig(**kwargs)

    def test_noiseless_copy(self):
        cfg = SensorConfig(vector_noise_std=0.1, gyro_noise_std=0.2, accel_bias=(1, 2, 3), seed=9).noiseless()
        assert (cfg.vector_noise_std, cfg.gyro_noise_std, cfg.accel_bias, cfg.seed) == (0.0, 0.0, (0.0, 0.0, 0.0), 9)

    def test_streams(self):
        traj = integrate_attitude(EXAMPLE1_R0, OmegaSignal.constant(EXAMPLE1_OMEGA), 1e-2, 1.0)
        gyro = gyro_stream(traj, self.noiseless)
        np.testing.assert_array_equal(gyro.values, traj.omegas)
        y = vector_stream(traj, example1_reference(), self.noiseless, "complementary")
        np.testing.assert_allclose(y.values[0], [-1, 0, 0], atol=1e-15)
        with pytest.raises(ValueError):
            vector_stream(traj, example1_reference(), self.noiseless, "gyro")


def _ramp(n=1001, dt=0.01):
    t = np.arange(n) * dt
    return MeasurementStream(t, np.stack([t, 2 * t, np.ones(n)], axis=1), "compatible")


class TestDegrade:
    def test_identity(self):
        s = _ramp()
        out = degrade_stream(s, SensorConfig(sample_period_vector=0.01))
        np.testing.assert_array_equal(out.times, s.times)
        np.testing.assert_array_equal(out.values, s.values)

    def test_delay_shift(self):
        s = _ramp()
        out = degrade_stream(s, SensorConfig(delay_tau=0.1))
        grid = s.times
        idx = out.sample_and_hold(grid)
        ok = idx >= 0
        assert not ok[:10].any() and ok[10:].all()
        np.testing.assert_allclose(out.values[idx[ok], 0], grid[ok] - 0.1, atol=1e-12)

    def test_period_count(self):
        out = degrade_stream(_ramp(), SensorConfig(sample_period_vector=1.0))
        assert len(out) == math.floor(10.0) + 1
        np.testing.assert_allclose(out.times, np.arange(11.0), atol=1e-12)

    def test_delay_beyond_horizon(self):
        with pytest.raises(ValueError, match="empty stream"):
            degrade_stream(_ramp(), SensorConfig(delay_tau=20.0))

    def test_gyro_uses_gyro_period(self):
        s = MeasurementStream(np.arange(101) * 0.01, np.zeros((101, 3)), "gyro")
        out = degrade_stream(s, SensorConfig(sample_period_gyro=0.1, sample_period_vector=0.5))
        assert len(out) == 11

    def test_period_below_spacing(self):
        with pytest.raises(ValueError):
            degrade_stream(_ramp(), SensorConfig(sample_period_vector=0.001))


class TestStreamIO:
    def test_csv_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        s = MeasurementStream(np.cumsum(rng.uniform(0.1, 1, 20)), rng.standard_normal((20, 3)), "gyro")
        path = write_stream_csv(s, tmp_path / "s.csv")
        assert path.read_text().splitlines()[0] == "t,kind,v1,v2,v3"
        back = read_stream_csv(path)
        assert back.kind == "gyro"
        np.testing.assert_array_equal(back.times, s.times)
        np.testing.assert_array_equal(back.values, s.values)

    @pytest.mark.parametrize(
        "times, values, kind",
        [([0.0, 0.0], np.zeros((2, 3)), "gyro"), ([0.0], np.zeros((2, 3)), "gyro"),
         ([0.0], np.zeros((1, 3)), "magnetometer"), ([0.0], np.full((1, 3), np.inf), "gyro")],
    )
    def test_stream_validation(self, times, values, kind):
        with pytest.raises(ValueError):
            MeasurementStream(np.array(times), values, kind)
