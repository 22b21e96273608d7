import numpy as np
import pytest

from gainkf.bench.nclt import (
    DeadReckoning,
    evaluate_positions,
    import_recordings,
    synthesize_recordings,
)
from gainkf.exceptions import MissingArtifactError


@pytest.fixture(scope="module")
def recordings(tmp_path_factory):
    out = tmp_path_factory.mktemp("rec")
    return synthesize_recordings(out, duration_s=1200.0, rate_hz=1.0, seed=4)


class TestDeadReckoning:
    def test_positions_are_cumulative_velocity_sums(self):
        Y = np.array([[1.0, 2.0, -1.0], [0.5, 0.5, 0.5]])
        x0 = np.array([10.0, 0.0, -5.0, 0.0])
        est = DeadReckoning(dtau=2.0).filter_trajectory(Y, x0)
        assert np.allclose(est[0], 10.0 + 2.0 * np.cumsum(Y[0]))
        assert np.allclose(est[2], -5.0 + 2.0 * np.cumsum(Y[1]))
        assert np.array_equal(est[1], Y[0])


class TestSyntheticRecordings:
    def test_schema(self, recordings):
        gt_head = recordings["gt"].read_text().splitlines()[0]
        odo_head = recordings["odometry"].read_text().splitlines()[0]
        assert gt_head == "utime,x,y"
        assert odo_head == "utime,vx,vy"

    def test_round_trip_positions_exact_velocities_fd_limited(self, recordings):
        truth = recordings["trajectory"]
        datasets = import_recordings(recordings["gt"], recordings["odometry"],
                                     rate_hz=1.0, segment_length=100)
        tr = datasets["train"].trajectories[0]   # starts at stream index 1
        pos_err = np.max(np.abs(tr.X[[0, 2]] - truth.X[[0, 2], 1:1 + tr.T]))
        assert pos_err == 0.0
        # velocity is derived by symmetric differences of position; its
        # deviation from the true velocity is bounded by the per-step
        # velocity increment scale sqrt(q2*dtau)
        vel_err = np.max(np.abs(tr.X[[1, 3]] - truth.X[[1, 3], 1:1 + tr.T]))
        assert vel_err < 5.0 * np.sqrt(1e-5 * 1.0)
        # observations pass through untouched
        assert np.array_equal(tr.Y, truth.Y[:, 1:1 + tr.T])

    def test_split_fractions_honored_within_one_sequence(self, recordings):
        datasets = import_recordings(recordings["gt"], recordings["odometry"],
                                     rate_hz=1.0, segment_length=100)
        n_train = sum(tr.T for tr in datasets["train"])
        n_val = sum(tr.T for tr in datasets["validation"])
        n_test = sum(tr.T for tr in datasets["test"])
        total = 1200
        assert abs(n_train - 0.85 * total) <= 100    # one segment of slack
        assert abs(n_val - 0.10 * total) <= 100
        assert n_test >= 2
        assert len(datasets["test"]) == 1            # test stays one sequence


class TestImporterRobustness:
    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            import_recordings(tmp_path / "gt.csv", tmp_path / "odo.csv")

    def test_empty_csv_rejected(self, tmp_path):
        gt = tmp_path / "gt.csv"; gt.write_text("utime,x,y\n")
        odo = tmp_path / "odo.csv"; odo.write_text("utime,vx,vy\n")
        with pytest.raises(ValueError):
            import_recordings(gt, odo)

    def test_wrong_columns_rejected(self, tmp_path):
        gt = tmp_path / "gt.csv"; gt.write_text("utime,lat,lon\n1,2,3\n")
        odo = tmp_path / "odo.csv"; odo.write_text("utime,vx,vy\n1,0,0\n")
        with pytest.raises(ValueError):
            import_recordings(gt, odo)

    def test_unstable_rows_dropped(self, tmp_path, caplog):
        # one timestamp regression and one NaN row must both be discarded
        rows = ["utime,x,y"]
        for t in range(0, 40):
            rows.append(f"{t * 1_000_000},{0.1 * t},{0.2 * t}")
        rows.insert(5, "3000000,nan,1.0")
        rows.insert(10, "1000000,0.5,0.5")
        gt = tmp_path / "gt.csv"; gt.write_text("\n".join(rows) + "\n")
        odo_rows = ["utime,vx,vy"] + [f"{t * 1_000_000},0.1,0.2" for t in range(40)]
        odo = tmp_path / "odo.csv"; odo.write_text("\n".join(odo_rows) + "\n")
        datasets = import_recordings(gt, odo, rate_hz=1.0, segment_length=10,
                                     splits=(0.5, 0.25, 0.25))
        assert datasets["train"].trajectories[0].T == 10

    def test_coverage_gap_rejected(self, tmp_path):
        gt_rows = ["utime,x,y"] + [f"{t * 1_000_000},{t},{t}" for t in range(30)]
        # odometry has a 12-second hole
        odo_rows = ["utime,vx,vy"] + [
            f"{t * 1_000_000},1,1" for t in list(range(10)) + list(range(22, 30))]
        gt = tmp_path / "gt.csv"; gt.write_text("\n".join(gt_rows) + "\n")
        odo = tmp_path / "odo.csv"; odo.write_text("\n".join(odo_rows) + "\n")
        with pytest.raises(ValueError, match="coverage gap"):
            import_recordings(gt, odo, rate_hz=1.0, segment_length=5,
                              splits=(0.5, 0.25, 0.25))


class TestPositionMetric:
    def test_only_position_dims_counted(self):
        class Fake:
            def filter_trajectory(self, Y, x0):
                est = np.zeros((4, Y.shape[1]))
                est[1] = 100.0   # huge velocity error must not matter
                return est

        from gainkf.data import Dataset, Trajectory

        X = np.zeros((4, 5)); X[0] = 3.0    # position error of 3 on x
        ds = Dataset([Trajectory(x0=np.zeros(4), X=X, Y=np.zeros((2, 5)))], split="test")
        res = evaluate_positions(Fake(), ds)
        assert res["mse"] == pytest.approx(4.5)   # (3^2 + 0^2)/2
