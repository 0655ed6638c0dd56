import numpy as np
import pytest

from emtree.datasets import (BanditEnv, DatasetError, SupervisedDataset,
                             apply_scaling, fit_scaling, load_csv, subsample,
                             top_eigen_explained_variance)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_numeric_parse(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n")
        ds = load_csv(path, label_column="label")
        assert ds.n_features == 2 and ds.n_classes == 2 and len(ds) == 3
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])
        assert ds.class_names == ["yes", "no"]

    def test_categorical_one_hot(self, tmp_path):
        path = write(tmp_path, "color,label\nred,0\nblue,1\nred,1\n")
        ds = load_csv(path, label_column="label")
        assert ds.n_features == 2
        assert ds.feature_names == ["color=red", "color=blue"]
        np.testing.assert_array_equal(ds.features, [[1, 0], [0, 1], [1, 0]])

    def test_wrong_arity_names_line(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,2,x\n3,4\n5,6,x\n")
        with pytest.raises(DatasetError, match="line 3"):
            load_csv(path, label_column="label")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_csv(tmp_path / "nope.csv")

    def test_unknown_label_column(self, tmp_path):
        path = write(tmp_path, "a,b\n1,x\n2,y\n")
        with pytest.raises(DatasetError, match="unknown label column"):
            load_csv(path, label_column="target")

    def test_label_by_index_and_no_header(self, tmp_path):
        path = write(tmp_path, "1,2,x\n3,4,y\n")
        ds = load_csv(path, label_column=-1, has_header=False)
        assert ds.n_features == 2 and ds.n_classes == 2
        ds2 = load_csv(path, label_column=2, has_header=False)
        np.testing.assert_array_equal(ds.labels, ds2.labels)

    def test_empty_numeric_cells_imputed_with_counter(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,,x\n,4,y\n")
        ds = load_csv(path, label_column="label")
        assert ds.imputed_cells == 2
        np.testing.assert_array_equal(ds.features, [[1, 0], [0, 4]])

    def test_single_class_rejected(self, tmp_path):
        path = write(tmp_path, "a,label\n1,x\n2,x\n")
        with pytest.raises(DatasetError, match="classes"):
            load_csv(path, label_column="label")


class TestScaling:
    def test_range_scaling(self):
        ds = SupervisedDataset(features=np.array([[2.0], [6.0], [4.0]]),
                               labels=np.array([0, 1, 0]), n_classes=2)
        t = fit_scaling(ds)
        assert t.factors[0] == 0.25
        scaled = apply_scaling(ds, t)
        np.testing.assert_allclose(scaled.features[:, 0], [0.0, 1.0, 0.5])

    def test_constant_feature_maps_to_zero(self):
        ds = SupervisedDataset(features=np.full((3, 1), 7.0),
                               labels=np.array([0, 1, 0]), n_classes=2)
        t = fit_scaling(ds)
        assert t.factors[0] == 0.0
        assert not apply_scaling(ds, t).features.any()

    def test_unit_range_unchanged(self):
        ds = SupervisedDataset(features=np.array([[0.0], [0.25], [1.0]]),
                               labels=np.array([0, 1, 0]), n_classes=2)
        t = fit_scaling(ds)
        assert t.factors[0] == 1.0
        np.testing.assert_array_equal(apply_scaling(ds, t).features, ds.features)

    def test_nonconstant_features_span_unit_interval(self):
        rng = np.random.default_rng(0)
        ds = SupervisedDataset(features=rng.standard_normal((50, 6)) * 9 + 3,
                               labels=rng.integers(2, size=50), n_classes=2)
        scaled = apply_scaling(ds, fit_scaling(ds))
        np.testing.assert_allclose(scaled.features.min(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(scaled.features.max(axis=0), 1.0, rtol=1e-12)


class TestSubsample:
    def test_exact_size(self):
        rng = np.random.default_rng(1)
        ds = SupervisedDataset(features=rng.random((10000, 3)),
                               labels=rng.integers(2, size=10000), n_classes=2)
        sub = subsample(ds, 4000, seed=0)
        assert len(sub) == 4000

    def test_oversized_request_permutes_everything(self):
        rng = np.random.default_rng(2)
        ds = SupervisedDataset(features=np.arange(20, dtype=float)[:, None],
                               labels=rng.integers(2, size=20), n_classes=2)
        sub = subsample(ds, 50, seed=3)
        assert sorted(sub.features[:, 0]) == list(map(float, range(20)))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(3)
        ds = SupervisedDataset(features=rng.random((100, 2)),
                               labels=rng.integers(3, size=100), n_classes=3)
        a = subsample(ds, 30, seed=7)
        b = subsample(ds, 30, seed=7)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_no_duplication(self):
        ds = SupervisedDataset(features=np.arange(30, dtype=float)[:, None],
                               labels=np.arange(30) % 2, n_classes=2)
        sub = subsample(ds, 10, seed=4)
        assert len(set(sub.features[:, 0])) == 10

    def test_size_validation(self):
        ds = SupervisedDataset(features=np.zeros((3, 1)),
                               labels=np.array([0, 1, 0]), n_classes=2)
        with pytest.raises(ValueError):
            subsample(ds, 0, seed=0)


class TestBanditEnv:
    def make_env(self):
        ds = SupervisedDataset(features=np.array([[0.1], [0.2], [0.3]]),
                               labels=np.array([2, 0, 1]), n_classes=3)
        return BanditEnv(ds)

    def test_correct_action_pays_one(self):
        env = self.make_env()
        _, reveal = env.step()
        assert reveal(2) == 1.0

    def test_wrong_action_pays_zero(self):
        env = self.make_env()
        _, reveal = env.step()
        assert reveal(0) == 0.0

    def test_exactly_one_rewarding_action_per_round(self):
        env = self.make_env()
        for _ in range(3):
            _, reveal = env.step()
            assert sum(reveal(a) for a in range(3)) == 1.0

    def test_emits_exactly_t_rounds_then_signals(self):
        env = self.make_env()
        rounds = sum(1 for _ in env)
        assert rounds == 3
        with pytest.raises(StopIteration):
            env.step()

    def test_action_validation(self):
        env = self.make_env()
        _, reveal = env.step()
        with pytest.raises(ValueError):
            reveal(3)


class TestTopEigenExplained:
    def test_single_axis_is_everything(self):
        ds = SupervisedDataset(features=np.array([[1.0, 0.0], [2.0, 0.0], [5.0, 0.0]]),
                               labels=np.array([0, 1, 0]), n_classes=2)
        assert top_eigen_explained_variance(ds) == 1.0

    def test_isotropic_two_d(self):
        rng = np.random.default_rng(5)
        ds = SupervisedDataset(features=rng.standard_normal((10000, 2)),
                               labels=rng.integers(2, size=10000), n_classes=2)
        assert top_eigen_explained_variance(ds) == pytest.approx(0.5, abs=0.05)

    def test_anisotropic_ratio_nine_to_one(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((20000, 2)) * np.array([3.0, 1.0])
        ds = SupervisedDataset(features=X, labels=rng.integers(2, size=20000),
                               n_classes=2)
        assert top_eigen_explained_variance(ds) == pytest.approx(0.9, abs=0.02)

    def test_zero_variance_warns_and_returns_zero(self):
        ds = SupervisedDataset(features=np.ones((5, 3)),
                               labels=np.array([0, 1, 0, 1, 0]), n_classes=2)
        with pytest.warns(RuntimeWarning):
            assert top_eigen_explained_variance(ds) == 0.0

    def test_needs_two_rows(self):
        ds = SupervisedDataset(features=np.ones((2, 2)), labels=np.array([0, 1]),
                               n_classes=2)
        sub = subsample(ds, 1, seed=0)
        with pytest.raises(DatasetError):
            top_eigen_explained_variance(sub)
