import numpy as np
import pytest

from gainkf import NoiseSpec, ssm
from gainkf.data import (
    Dataset,
    Trajectory,
    export_trajectory_csv,
    import_trajectory_csv,
    load_dataset,
    save_dataset,
)
from gainkf.exceptions import MissingArtifactError, ShapeError


@pytest.fixture
def dataset(linear2, noise_20db):
    return ssm.simulate_dataset(linear2, noise_20db, 4, [5, 7, 5, 9], seed=3,
                                split="train")


class TestTrajectory:
    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ShapeError):
            Trajectory(x0=np.zeros(2), X=np.zeros((2, 5)), Y=np.zeros((2, 4)))

    def test_non_finite_rejected(self):
        X = np.zeros((1, 3)); X[0, 1] = np.nan
        with pytest.raises(ValueError):
            Trajectory(x0=np.zeros(1), X=X, Y=np.zeros((1, 3)))

    def test_prefix(self, dataset):
        tr = dataset.trajectories[1]
        pre = tr.prefix(3)
        assert pre.T == 3
        assert np.array_equal(pre.X, tr.X[:, :3])
        assert np.array_equal(pre.x0, tr.x0)

    def test_segments_restart_from_ground_truth(self, dataset):
        tr = dataset.trajectories[3]         # T=9
        segs = tr.segments(3)
        assert len(segs) == 3
        assert np.array_equal(segs[0].x0, tr.x0)
        assert np.array_equal(segs[1].x0, tr.X[:, 2])
        assert np.array_equal(segs[2].X, tr.X[:, 6:9])


class TestDataset:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Dataset(trajectories=[], split="train")

    def test_bad_split_tag_rejected(self, dataset):
        with pytest.raises(ValueError):
            Dataset(trajectories=dataset.trajectories, split="holdout")

    def test_dimension_consistency_enforced(self, dataset):
        other = Trajectory(x0=np.zeros(3), X=np.zeros((3, 4)) + 1.0, Y=np.zeros((2, 4)))
        with pytest.raises(ShapeError):
            Dataset(trajectories=dataset.trajectories + [other], split="train")


class TestBinaryFormat:
    def test_round_trip(self, dataset, tmp_path):
        manifest = save_dataset(dataset, tmp_path, name="train")
        loaded = load_dataset(manifest)
        assert loaded.split == "train"
        assert len(loaded) == len(dataset)
        for a, b in zip(loaded, dataset):
            assert np.array_equal(a.x0, b.x0)
            assert np.array_equal(a.X, b.X)
            assert np.array_equal(a.Y, b.Y)

    def test_payload_is_column_major_little_endian(self, dataset, tmp_path):
        save_dataset(dataset, tmp_path, name="train")
        raw = (tmp_path / "train.bin").read_bytes()
        tr = dataset.trajectories[0]
        # first block: x0 length prefix then the x0 values
        count = int.from_bytes(raw[:8], "little")
        assert count == tr.m
        x0 = np.frombuffer(raw, dtype="<f8", count=count, offset=8)
        assert np.array_equal(x0, tr.x0)
        # second block: X in column-major order (time-major streaming)
        off = 8 + count * 8
        xcount = int.from_bytes(raw[off:off + 8], "little")
        assert xcount == tr.m * tr.T
        X = np.frombuffer(raw, dtype="<f8", count=xcount, offset=off + 8)
        assert np.array_equal(X, tr.X.flatten(order="F"))

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            load_dataset(tmp_path / "nope.manifest.json")

    def test_meta_survives(self, dataset, tmp_path):
        dataset.meta["inv_r2_db"] = 20.0
        manifest = save_dataset(dataset, tmp_path, name="train")
        assert load_dataset(manifest).meta["inv_r2_db"] == 20.0


class TestCsvInterop:
    def test_round_trip(self, dataset, tmp_path):
        tr = dataset.trajectories[0]
        path = tmp_path / "traj.csv"
        export_trajectory_csv(tr, path)
        back = import_trajectory_csv(path, x0=tr.x0)
        assert np.array_equal(back.X, tr.X)
        assert np.array_equal(back.Y, tr.Y)

    def test_header_and_row_shape(self, dataset, tmp_path):
        tr = dataset.trajectories[0]
        path = tmp_path / "traj.csv"
        export_trajectory_csv(tr, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x_1,x_2,y_1,y_2"
        assert len(lines) == tr.T + 1
        assert lines[1].split(",")[0] == "1"
