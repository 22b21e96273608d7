import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from gainkf import NoiseSpec, ssm
from gainkf.exceptions import ShapeError, SimulationDivergedError


class TestNoiseSpec:
    def test_from_db_zero_nu_means_equal_variances(self):
        spec = NoiseSpec.from_db(20.0, 0.0)
        assert spec.q2 == pytest.approx(0.01)
        assert spec.r2 == pytest.approx(0.01)
        assert spec.nu == pytest.approx(1.0)

    def test_nu_ratio(self):
        spec = NoiseSpec.from_db(0.0, -20.0)
        assert spec.nu == pytest.approx(0.01)
        assert spec.nu_db == pytest.approx(-20.0)

    def test_covariances_are_scaled_identities(self):
        spec = NoiseSpec(q2=2.0, r2=0.5)
        assert np.array_equal(spec.Q(3), 2.0 * np.eye(3))
        assert np.array_equal(spec.R(2), 0.5 * np.eye(2))

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(q2=-1.0, r2=0.1)


class TestCanonicalForms:
    def test_m1_is_half(self):
        assert np.array_equal(ssm.canonical_F(1), [[0.5]])

    def test_m2_companion_of_squared_root(self):
        # (z - 0.5)^2 = z^2 - z + 0.25
        assert np.allclose(ssm.canonical_F(2), [[0.0, 1.0], [-0.25, 1.0]])

    @pytest.mark.parametrize("m", range(1, 11))
    def test_spectral_radius_below_one(self, m):
        radius = np.max(np.abs(np.linalg.eigvals(ssm.canonical_F(m))))
        assert radius < 1.0

    def test_exchange_full(self):
        assert np.array_equal(ssm.exchange_H(2), [[0.0, 1.0], [1.0, 0.0]])

    def test_exchange_reduced_rows(self):
        H = ssm.exchange_H(3, 2)
        assert H.shape == (2, 3)
        assert np.array_equal(H, np.eye(3)[::-1][:2])


class TestRotation:
    def test_zero_angle_identity(self, rng):
        B = rng.normal(size=(2, 2))
        assert np.allclose(ssm.rotate_matrix(B, 0.0), B)

    def test_ninety_degrees_on_identity(self):
        assert np.allclose(ssm.rotate_matrix(np.eye(2), 90.0), [[0.0, -1.0], [1.0, 0.0]])

    def test_non_2x2_rejected(self):
        with pytest.raises(ShapeError):
            ssm.rotate_matrix(np.eye(3), 10.0)

    @given(st.floats(min_value=-360.0, max_value=360.0))
    @settings(max_examples=50, deadline=None)
    def test_rotation_composition_is_identity(self, alpha):
        R_pos = ssm.rotate_matrix(np.eye(2), alpha)
        R_neg = ssm.rotate_matrix(np.eye(2), -alpha)
        assert np.max(np.abs(R_pos @ R_neg - np.eye(2))) < 1e-14


class TestLinearModel:
    def test_identity_keeps_initial_state(self):
        model = ssm.linear_model(np.eye(2), np.eye(2))
        traj = ssm.simulate(model, NoiseSpec(0.0, 0.0), [1.5, -2.0], 5, seed=0)
        assert np.allclose(traj.X, np.tile([[1.5], [-2.0]], 5))

    def test_jacobian_equals_evolution_matrix(self, linear2, rng):
        x = rng.normal(size=2)
        assert np.array_equal(linear2.jac_f(x), ssm.canonical_F(2))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            ssm.linear_model(np.eye(2), np.ones((2, 3)))


class TestSimulate:
    def test_noiseless_linear_matches_matrix_power(self, linear2):
        x0 = np.array([1.0, -1.0])
        traj = ssm.simulate(linear2, NoiseSpec(0.0, 0.0), x0, 8, seed=0)
        F = ssm.canonical_F(2)
        expected = x0
        for t in range(8):
            expected = F @ expected
            assert np.array_equal(traj.X[:, t], expected)

    def test_same_seed_identical(self, linear2, noise_20db):
        a = ssm.simulate(linear2, noise_20db, [0.0, 0.0], 50, seed=99)
        b = ssm.simulate(linear2, noise_20db, [0.0, 0.0], 50, seed=99)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)

    def test_injected_noise_covariance_matches_spec(self, linear2):
        # Monte-Carlo estimate of cov(x_t - f(x_{t-1})) against q2*I
        noise = NoiseSpec(q2=1.0, r2=0.0)
        traj = ssm.simulate(linear2, noise, [0.0, 0.0], 100_000, seed=7)
        F = ssm.canonical_F(2)
        prev = np.hstack([traj.x0[:, None], traj.X[:, :-1]])
        w = traj.X - F @ prev
        cov = (w @ w.T) / w.shape[1]
        assert np.max(np.abs(cov - np.eye(2))) < 0.02

    def test_divergent_model_raises_with_index(self):
        blow = ssm.SSModel(m=1, n=1, f=lambda x: x * x * 1e3, h=lambda x: x)
        with pytest.raises(SimulationDivergedError) as err:
            ssm.simulate(blow, NoiseSpec(0.0, 0.0), [10.0], 100, seed=0)
        assert 1 <= err.value.index <= 100

    def test_dataset_per_trajectory_seeds_are_stable(self, linear2, noise_20db):
        a = ssm.simulate_dataset(linear2, noise_20db, 5, 10, seed=31, split="train")
        b = ssm.simulate_dataset(linear2, noise_20db, 5, 10, seed=31, split="train")
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.Y, tb.Y)


class TestToyModel:
    def test_full_parameter_table(self):
        model = ssm.toy_model()
        meta = model.meta
        assert meta["alpha"] == 0.9 and meta["beta"] == 1.1
        assert meta["phi"] == pytest.approx(0.1 * math.pi)
        assert meta["delta"] == 0.01
        assert (meta["a"], meta["b"], meta["c"]) == (1.0, 1.0, 0.0)

    def test_quadratic_observation_at_ones(self):
        model = ssm.toy_model({"a": 1.0, "b": 1.0, "c": 0.0})
        assert np.allclose(model.h(np.ones(2)), np.ones(2))

    def test_partial_params_jacobian_at_zero_is_identity(self):
        model = ssm.toy_model(ssm.TOY_PARTIAL_PARAMS)
        assert np.allclose(model.jac_f(np.zeros(2)), np.eye(2))


class TestLorenzDiscretization:
    def test_zero_interval_gives_identity(self):
        # dtau=0 leaves only the leading identity term
        for J in (1, 5, 30):
            assert np.array_equal(ssm.lorenz_F([3.0, -1.0, 7.0], 0.0, J), np.eye(3))

    def test_default_generation_setting(self):
        model = ssm.lorenz_model()
        assert model.meta["J"] == 5 and model.meta["dtau"] == 0.02

    def test_high_order_matches_matrix_exponential(self, rng):
        # scaling-and-squaring oracle; J=30 leaves only float roundoff
        for _ in range(20):
            x = rng.uniform(-50, 50, 3)
            oracle = expm(ssm._attractor_A(x) * 0.02)
            diff = np.linalg.norm(ssm.lorenz_F(x, 0.02, 30) - oracle, "fro")
            assert diff < 1e-10

    def test_j5_step_from_ones_against_exponential_oracle(self):
        # frozen oracle value: ||F_5(x) x - expm(A(x) dtau) x|| at x = (1,1,1)
        x = np.ones(3)
        model = ssm.lorenz_model(0.02, 5)
        oracle = expm(ssm._attractor_A(x) * 0.02) @ x
        diff = np.linalg.norm(model.f(x) - oracle)
        assert diff == pytest.approx(6.10295737e-06, rel=1e-6)

    def test_linear_in_state_form_vanishes_at_origin(self):
        model = ssm.lorenz_model(0.02, 5)
        assert np.array_equal(model.f(np.zeros(3)), np.zeros(3))

    def test_taylor_tail_shrinks_with_order(self, rng):
        # ||F_J - F_{J+1}|| decreases beyond a burn-in order for dtau=0.02
        for _ in range(5):
            x = rng.uniform(-50, 50, 3)
            tails = [np.linalg.norm(ssm.lorenz_F(x, 0.02, J) - ssm.lorenz_F(x, 0.02, J + 1), "fro")
                     for J in range(3, 12)]
            assert all(a > b for a, b in zip(tails, tails[1:]))

    def test_mismatched_filter_order_changes_fingerprint(self):
        assert (ssm.lorenz_model(0.02, 5).fingerprint()
                != ssm.lorenz_model(0.02, 2).fingerprint())

    def test_batched_f_matches_per_column(self, rng):
        model = ssm.lorenz_model(0.02, 5)
        X = rng.normal(0, 10, (3, 9))
        percol = np.column_stack([model.f(X[:, j]) for j in range(9)])
        assert np.allclose(model.apply_f(X), percol, atol=1e-12)


def spherical_to_cartesian(s):
    r, theta, phi = s
    return np.array([r * math.sin(theta) * math.cos(phi),
                     r * math.sin(theta) * math.sin(phi),
                     r * math.cos(theta)])


class TestSphericalObservation:
    def test_north_pole(self):
        assert np.allclose(ssm.spherical_h([0.0, 0.0, 1.0]), [1.0, 0.0, 0.0])

    def test_x_axis(self):
        assert np.allclose(ssm.spherical_h([1.0, 0.0, 0.0]), [1.0, math.pi / 2, 0.0])

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            ssm.spherical_h([0.0, 0.0, 0.0])

    def test_round_trip_via_inverse_oracle(self, rng):
        for _ in range(50):
            x = rng.normal(size=3)
            if np.linalg.norm(x) < 1e-3:
                continue
            assert np.max(np.abs(spherical_to_cartesian(ssm.spherical_h(x)) - x)) < 1e-12

    def test_jacobian_matches_finite_differences(self, rng):
        model = ssm.lorenz_model(observation="spherical")
        for _ in range(10):
            x = rng.normal(size=3) * 5
            if abs(x[0]) < 0.1 and abs(x[1]) < 0.1:
                continue
            fd = ssm.finite_difference_jacobian(model.h, x, 3)
            assert np.max(np.abs(model.jac_h(x) - fd)) < 1e-6


class TestDecimate:
    def test_identity_factor(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.0, 0.0], 12, seed=0)
        dec = ssm.decimate(traj, 1)
        assert np.array_equal(dec.X, traj.X)

    def test_keeps_every_kth_sample(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.0, 0.0], 12, seed=0)
        dec = ssm.decimate(traj, 3)
        assert dec.T == 4
        assert np.array_equal(dec.X, traj.X[:, 2::3])
        assert np.array_equal(dec.Y, traj.Y[:, 2::3])

    def test_non_divisor_rejected(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.0, 0.0], 10, seed=0)
        with pytest.raises(ValueError):
            ssm.decimate(traj, 3)
        with pytest.raises(ValueError):
            ssm.decimate(traj, 0)

    def test_dense_ratio_reaches_effective_interval(self):
        # 1e-5 sampling decimated by 1/2000 lands on 0.02
        assert 1e-5 * 2000 == pytest.approx(0.02)


class TestWienerVelocityModel:
    def test_unit_interval_blocks(self):
        model, Q = ssm.wiener_velocity_model(1.0, 2.0)
        F = model.jac_f(np.zeros(4))
        assert np.allclose(F[:2, :2], [[1.0, 1.0], [0.0, 1.0]])
        assert np.allclose(Q[:2, :2], 2.0 * np.array([[1 / 3, 1 / 2], [1 / 2, 1.0]]))

    def test_small_interval_limit(self):
        model, Q = ssm.wiener_velocity_model(1e-9, 1.0)
        assert np.allclose(model.jac_f(np.zeros(4)), np.eye(4), atol=1e-8)
        assert np.max(np.abs(Q)) < 1e-8

    def test_velocity_only_observation(self):
        model, _ = ssm.wiener_velocity_model(0.5, 1.0)
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(model.h(x), [2.0, 4.0])

    @pytest.mark.parametrize("dtau", [1e-3, 0.1, 0.5, 1.0, 5.0])
    def test_process_covariance_psd(self, dtau):
        _, Q = ssm.wiener_velocity_model(dtau, 1.0)
        assert np.min(np.linalg.eigvalsh(Q)) >= -1e-15
