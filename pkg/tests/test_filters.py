import numpy as np
import pytest

from gainkf import NoiseSpec, ssm
from gainkf.exceptions import (
    DegenerateWeightsError,
    FilterDivergedError,
    IllConditionedInnovationError,
)
from gainkf.filters import (
    ExtendedKalmanFilter,
    KalmanFilter,
    ParticleFilter,
    SigmaPointParams,
    UnscentedKalmanFilter,
    kf_predict,
    kf_update,
    pf_step,
    sigma_points,
    systematic_resample,
    tune_covariances,
)
from gainkf.filters.kalman import GaussianBelief
from gainkf.filters.particle import ParticleBelief
from gainkf.metrics import evaluate_estimator


def riccati_fixed_point(F, H, Q, R, iterations=2000):
    """Independent oracle: iterate the prediction/update covariance map."""
    P = np.zeros_like(Q)
    for _ in range(iterations):
        Pp = F @ P @ F.T + Q
        S = H @ Pp @ H.T + R
        K = Pp @ H.T @ np.linalg.inv(S)
        P = Pp - K @ S @ K.T
    Pp = F @ P @ F.T + Q
    S = H @ Pp @ H.T + R
    return Pp @ H.T @ np.linalg.inv(S)


class TestKfPredict:
    def test_identity_no_noise_keeps_belief(self):
        belief = GaussianBelief(np.array([1.0, 2.0]), 0.3 * np.eye(2))
        prior, yhat, S = kf_predict(belief, np.eye(2), np.eye(2),
                                    np.zeros((2, 2)), 0.1 * np.eye(2))
        assert np.array_equal(prior.mean, belief.mean)
        assert np.allclose(prior.cov, belief.cov)

    def test_scalar_substitution(self):
        belief = GaussianBelief(np.array([0.0]), np.zeros((1, 1)))
        prior, yhat, S = kf_predict(belief, np.eye(1), np.eye(1),
                                    np.eye(1), 0.25 * np.eye(1))
        assert prior.cov[0, 0] == pytest.approx(1.0)
        assert S[0, 0] == pytest.approx(1.25)

    def test_matches_dense_matrix_oracle(self, rng):
        for _ in range(10):
            F = rng.normal(size=(2, 2)); H = rng.normal(size=(2, 2))
            A = rng.normal(size=(2, 2)); P = A @ A.T + 0.1 * np.eye(2)
            Q = 0.3 * np.eye(2); R = 0.2 * np.eye(2)
            belief = GaussianBelief(rng.normal(size=2), P)
            prior, yhat, S = kf_predict(belief, F, H, Q, R)
            assert np.allclose(prior.cov, F @ P @ F.T + Q)
            assert np.allclose(S, H @ (F @ P @ F.T + Q) @ H.T + R)
            assert np.allclose(yhat, H @ F @ belief.mean)


class TestKfUpdate:
    def test_scalar_algebra(self):
        prior = GaussianBelief(np.array([0.0]), np.eye(1))
        S = np.array([[2.0]])
        posterior, K, innovation = kf_update(prior, np.array([2.0]), S, np.eye(1),
                                             yhat=np.array([0.0]))
        assert K[0, 0] == pytest.approx(0.5)
        assert posterior.mean[0] == pytest.approx(1.0)
        assert posterior.cov[0, 0] == pytest.approx(0.5)

    def test_gain_converges_to_riccati_fixed_point(self, linear2, noise_20db):
        F, H = ssm.canonical_F(2), ssm.exchange_H(2)
        Q, R = noise_20db.Q(2), noise_20db.R(2)
        K_star = riccati_fixed_point(F, H, Q, R)
        traj = ssm.simulate(linear2, noise_20db, [1.0, -1.0], 200, seed=5)
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        records = kf.filter_steps(traj.Y, traj.x0)
        assert np.max(np.abs(records[-1].gain - K_star)) < 1e-10

    def test_singular_innovation_raises(self):
        prior = GaussianBelief(np.zeros(2), np.eye(2))
        S = np.zeros((2, 2))
        with pytest.raises(IllConditionedInnovationError):
            kf_update(prior, np.zeros(2), S, np.eye(2), yhat=np.zeros(2))

    def test_innovation_stored_exactly(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.3, 0.7], 20, seed=8)
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        for t, rec in enumerate(kf.filter_steps(traj.Y, traj.x0)):
            assert np.array_equal(rec.innovation, traj.Y[:, t] - rec.predicted_obs)


class TestKfConsistency:
    def test_empirical_mse_matches_covariance_trace(self, linear2, noise_20db):
        # analytic MMSE consistency: MSE per dim vs posterior trace per dim
        ds = ssm.simulate_dataset(linear2, noise_20db, 60, 100, seed=42, split="test")
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        result = evaluate_estimator(kf, ds, stopwatch=False)
        records = kf.filter_steps(ds.trajectories[0].Y, ds.trajectories[0].x0)
        trace_per_dim = np.mean([np.trace(r.posterior_cov) / 2 for r in records])
        gap = abs(result["mse_db"] - 10 * np.log10(trace_per_dim))
        assert gap < 0.5

    def test_posterior_covariances_symmetric_psd(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [1.0, 0.0], 50, seed=6)
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        for rec in kf.filter_steps(traj.Y, traj.x0):
            assert np.array_equal(rec.posterior_cov, rec.posterior_cov.T)
            assert np.min(np.linalg.eigvalsh(rec.posterior_cov)) > -1e-9


class TestExtendedKalmanFilter:
    def test_coincides_with_kf_on_linear_model(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.5, -0.5], 40, seed=9)
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        ekf = ExtendedKalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        kf_recs = kf.filter_steps(traj.Y, traj.x0)
        ekf_recs = ekf.filter_steps(traj.Y, traj.x0)
        for a, b in zip(kf_recs, ekf_recs):
            assert np.max(np.abs(a.posterior_mean - b.posterior_mean)) < 1e-12
            assert np.max(np.abs(a.posterior_cov - b.posterior_cov)) < 1e-12

    def test_tracks_toy_model(self):
        model = ssm.toy_model()
        noise = NoiseSpec.from_db(20.0, -20.0)
        ds = ssm.simulate_dataset(model, noise, 10, 100, seed=12, split="test")
        ekf = ExtendedKalmanFilter(model, q2=noise.q2, r2=noise.r2)
        result = evaluate_estimator(ekf, ds, stopwatch=False)
        # must clearly beat the raw-observation error floor
        assert result["mse_db"] < -20.0

    def test_kalman_filter_rejects_nonlinear_model(self):
        model = ssm.toy_model()
        kf = KalmanFilter(model, q2=0.1, r2=0.1)
        with pytest.raises(ValueError):
            kf.filter_trajectory(np.zeros((2, 3)), np.zeros(2))


class TestUnscented:
    def test_agrees_with_kf_on_linear_model(self, linear2, noise_20db):
        # unscented transform is exact for linear maps
        traj = ssm.simulate(linear2, noise_20db, [1.0, -0.5], 50, seed=11)
        kf = KalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        ukf = UnscentedKalmanFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2)
        diff = np.max(np.abs(kf.predict(traj) - ukf.predict(traj)))
        assert diff < 1e-8

    def test_sigma_points_symmetric_about_mean(self):
        mean = np.array([1.0, -2.0])
        pts, wm, wc = sigma_points(mean, np.eye(2), SigmaPointParams())
        assert np.allclose(pts[:, 0], mean)
        for i in range(2):
            lo = pts[:, 1 + i] - mean
            hi = pts[:, 3 + i] - mean
            assert np.allclose(lo, -hi)
        assert wm.sum() == pytest.approx(1.0)

    def test_kappa_default_is_three_minus_m(self):
        assert SigmaPointParams().resolved_kappa(3) == 0.0
        assert SigmaPointParams(kappa=1.0).resolved_kappa(3) == 1.0

    def test_cholesky_failure_after_jitter_raises(self):
        bad = np.array([[1.0, 0.0], [0.0, -1.0]])   # indefinite beyond any jitter
        with pytest.raises(FilterDivergedError):
            sigma_points(np.zeros(2), bad, SigmaPointParams())


class TestParticleFilter:
    def test_identical_particles_zero_noise_propagate_exactly(self, linear2):
        x0 = np.array([1.0, -1.0])
        belief = ParticleBelief(np.tile(x0[:, None], (1, 8)), np.full(8, 1 / 8))
        y = linear2.h(linear2.f(x0))
        new_belief, mean, degenerate = pf_step(
            belief, y, linear2, np.zeros((2, 2)), 0.1 * np.eye(2),
            np.random.default_rng(0))
        assert np.allclose(mean, linear2.f(x0))
        assert not degenerate

    def test_estimates_approach_kf_as_n_grows(self, linear2):
        noise = NoiseSpec.from_db(10.0, 0.0)
        ds = ssm.simulate_dataset(linear2, noise, 10, 40, seed=21, split="test")
        kf = KalmanFilter(linear2, q2=noise.q2, r2=noise.r2)
        kf_est = kf.predict(ds)
        dev = {}
        for N in (100, 1000, 10000):
            pf = ParticleFilter(linear2, q2=noise.q2, r2=noise.r2,
                                n_particles=N, seed=3)
            pf_est = pf.predict(ds)
            dev[N] = np.mean([np.mean((p - k) ** 2)
                              for p, k in zip(pf_est, kf_est)])
        # mean-squared deviation from the exact filter shrinks ~1/N
        assert dev[1000] < dev[100] / 3
        assert dev[10000] < dev[1000] / 3

    def test_weights_stay_on_simplex(self, linear2, noise_20db):
        traj = ssm.simulate(linear2, noise_20db, [0.0, 1.0], 30, seed=4)
        belief = ParticleBelief(np.tile(traj.x0[:, None], (1, 64)), np.full(64, 1 / 64))
        rng = np.random.default_rng(5)
        Q, R = noise_20db.Q(2), noise_20db.R(2)
        for t in range(traj.T):
            belief, _, _ = pf_step(belief, traj.Y[:, t], linear2, Q, R, rng)
            assert np.all(belief.weights >= 0)
            assert belief.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_weights_error_carries_recovery_flag(self, linear2):
        # likelihood exponent overflows for every particle -> all weights zero
        belief = ParticleBelief(np.zeros((2, 4)), np.full(4, 0.25))
        with np.errstate(over="ignore"), pytest.raises(DegenerateWeightsError) as err:
            pf_step(belief, np.full(2, 1e200), linear2, np.zeros((2, 2)),
                    1e-12 * np.eye(2), np.random.default_rng(0))
        assert err.value.reset_to_uniform

    def test_degenerate_recovery_resets_uniform(self, linear2):
        belief = ParticleBelief(np.zeros((2, 4)), np.full(4, 0.25))
        with np.errstate(over="ignore"):
            new_belief, _, degenerate = pf_step(
                belief, np.full(2, 1e200), linear2, np.zeros((2, 2)),
                1e-12 * np.eye(2), np.random.default_rng(0), recover_degenerate=True)
        assert degenerate
        assert np.allclose(new_belief.weights, 0.25)

    def test_systematic_resample_preserves_heavy_weights(self):
        weights = np.array([0.7, 0.1, 0.1, 0.1])
        idx = systematic_resample(weights, np.random.default_rng(0))
        assert len(idx) == 4
        assert np.sum(idx == 0) in (2, 3)   # heavy particle drawn ~0.7*N times

    def test_dataset_prediction_deterministic(self, linear2, noise_20db):
        ds = ssm.simulate_dataset(linear2, noise_20db, 3, 10, seed=1, split="test")
        pf = ParticleFilter(linear2, q2=noise_20db.q2, r2=noise_20db.r2,
                            n_particles=50, seed=9)
        a = pf.predict(ds)
        b = pf.predict(ds)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


class TestTuning:
    def test_single_point_grid_returns_it(self, linear2, noise_20db):
        ds = ssm.simulate_dataset(linear2, noise_20db, 5, 20, seed=2, split="validation")
        got = tune_covariances(
            lambda q2, r2: KalmanFilter(linear2, q2=q2, r2=r2), ds,
            [(0.5, 0.5)])
        assert got == (0.5, 0.5)

    def test_matched_grid_selects_true_point(self, linear2, noise_20db):
        ds = ssm.simulate_dataset(linear2, noise_20db, 40, 40, seed=3, split="validation")
        true = (noise_20db.q2, noise_20db.r2)
        grid = {"q2": [true[0] / 10, true[0], true[0] * 10],
                "r2": [true[1] / 10, true[1], true[1] * 10]}
        got = tune_covariances(
            lambda q2, r2: KalmanFilter(linear2, q2=q2, r2=r2), ds, grid,
            prefer=true)
        assert got == pytest.approx(true)

    def test_empty_grid_rejected(self, linear2, noise_20db):
        ds = ssm.simulate_dataset(linear2, noise_20db, 2, 5, seed=4, split="validation")
        with pytest.raises(ValueError):
            tune_covariances(lambda q2, r2: KalmanFilter(linear2, q2=q2, r2=r2), ds, [])

    def test_tuned_beats_untuned_under_evolution_mismatch(self):
        # crude-approximation filter model; tuning inflates q2 to compensate
        data_model = ssm.lorenz_model(0.02, 5)
        filter_model = ssm.lorenz_model(0.02, 2)
        noise = NoiseSpec.from_db(20.0, -20.0)
        val = ssm.simulate_dataset(data_model, noise, 6, 100, seed=5,
                                   split="validation", x0_kind="fixed",
                                   x0_value=[1.0, 1.0, 1.0])
        grid = {"q2": [noise.q2, noise.q2 * 10, noise.q2 * 100],
                "r2": [noise.r2]}
        q2_t, r2_t = tune_covariances(
            lambda q2, r2: ExtendedKalmanFilter(filter_model, q2=q2, r2=r2), val, grid)
        tuned = evaluate_estimator(
            ExtendedKalmanFilter(filter_model, q2=q2_t, r2=r2_t), val, stopwatch=False)
        untuned = evaluate_estimator(
            ExtendedKalmanFilter(filter_model, q2=noise.q2, r2=noise.r2), val,
            stopwatch=False)
        assert tuned["mse_db"] <= untuned["mse_db"]

    def test_fit_with_grid_sets_estimated_covariances(self, linear2, noise_20db):
        ds = ssm.simulate_dataset(linear2, noise_20db, 20, 30, seed=6, split="validation")
        kf = KalmanFilter(linear2, grid={"q2": [0.001, 0.01, 0.1], "r2": [0.01]})
        kf.fit(ds)
        assert kf.q2_ == pytest.approx(0.01)
