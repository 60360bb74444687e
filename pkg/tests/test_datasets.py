import numpy as np
import pytest

import qnngeom._iris as iris_table
from qnngeom.datasets import (
    Dataset,
    denormalize_features,
    gaussian_prior_sample,
    load_dataset,
    load_iris_binary,
    make_blobs,
    normalize_features,
    randomise_labels,
    save_dataset,
)
from qnngeom.errors import ValidationError
from qnngeom.rng import RngStream


class TestIris:
    def test_shape_and_balance(self):
        ds = load_iris_binary()
        assert ds.n_samples == 100
        assert ds.n_features == 4
        np.testing.assert_array_equal(np.bincount(ds.labels), [50, 50])

    def test_deterministic_order_and_known_rows(self):
        ds = load_iris_binary()
        np.testing.assert_allclose(ds.features[0], [5.1, 3.5, 1.4, 0.2])
        assert ds.labels[0] == 0
        assert ds.labels[99] == 1

    def test_checksum_guards_against_corruption(self, monkeypatch):
        monkeypatch.setattr(iris_table, "CSV", iris_table.CSV.replace("5.1", "9.9", 1))
        with pytest.raises(ValidationError, match="checksum"):
            load_iris_binary()


class TestBlobs:
    def test_paper_configuration(self):
        ds = make_blobs(1000, 6, rng=RngStream(0))
        assert ds.features.shape == (1000, 6)
        counts = np.bincount(ds.labels)
        assert abs(counts[0] - counts[1]) <= 1

    def test_zero_spread_collapses_to_centers(self):
        ds = make_blobs(10, 3, spread=0.0, rng=RngStream(1))
        for row, label in zip(ds.features, ds.labels):
            expected = [-1.5, 0, 0] if label == 0 else [1.5, 0, 0]
            np.testing.assert_allclose(row, expected)

    def test_seeds_change_points_not_counts(self):
        a = make_blobs(101, 4, rng=RngStream(2))
        b = make_blobs(101, 4, rng=RngStream(3))
        assert not np.allclose(a.features, b.features)
        np.testing.assert_array_equal(np.bincount(a.labels), np.bincount(b.labels))

    def test_determinism(self):
        a = make_blobs(50, 2, rng=RngStream(4))
        b = make_blobs(50, 2, rng=RngStream(4))
        assert a.digest() == b.digest()

    def test_validation(self):
        with pytest.raises(ValidationError):
            make_blobs(1, 2, rng=RngStream(0))


class TestRandomiseLabels:
    def test_zero_fraction_is_a_no_op(self):
        ds = make_blobs(100, 2, rng=RngStream(5))
        out = randomise_labels(ds, 0.0, RngStream(6))
        assert out.digest() == ds.digest()

    def test_touches_floor_of_fraction_times_n(self):
        ds = make_blobs(1000, 2, rng=RngStream(7))
        out = randomise_labels(ds, 0.3, RngStream(8))
        changed = np.sum(out.labels != ds.labels)
        assert changed <= 300  # resampling may repeat the old label

    def test_full_randomisation_flips_about_half(self):
        ds = make_blobs(1000, 2, rng=RngStream(9))
        rates = []
        for seed in range(50):
            out = randomise_labels(ds, 1.0, RngStream(10 + seed))
            rates.append(np.mean(out.labels != ds.labels))
        assert abs(np.mean(rates) - 0.5) < 0.05

    def test_original_untouched(self):
        ds = make_blobs(60, 2, rng=RngStream(70))
        digest = ds.digest()
        randomise_labels(ds, 0.5, RngStream(71))
        assert ds.digest() == digest

    def test_fraction_range(self):
        ds = make_blobs(10, 2, rng=RngStream(72))
        with pytest.raises(ValidationError):
            randomise_labels(ds, 1.5, RngStream(0))


class TestGaussianPrior:
    def test_moments(self):
        draws = gaussian_prior_sample(RngStream(11), 100_000, 3)
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.02)
        np.testing.assert_allclose(draws.var(axis=0), 1.0, atol=0.05)

    def test_determinism(self):
        a = gaussian_prior_sample(RngStream(12), 10, 2)
        b = gaussian_prior_sample(RngStream(12), 10, 2)
        np.testing.assert_array_equal(a, b)


class TestNormalization:
    def test_maps_onto_unit_interval(self):
        ds = make_blobs(200, 3, rng=RngStream(13))
        normed = normalize_features(ds)
        assert normed.features.min() == pytest.approx(-1.0)
        assert normed.features.max() == pytest.approx(1.0)
        assert normed.normalization is not None

    def test_round_trip(self):
        ds = make_blobs(50, 4, rng=RngStream(14))
        normed = normalize_features(ds)
        restored = denormalize_features(normed)
        np.testing.assert_allclose(restored.features, ds.features, atol=1e-12)

    def test_constant_feature_maps_to_zero(self):
        ds = Dataset(np.array([[1.0, 5.0], [2.0, 5.0]]), np.array([0, 1]))
        normed = normalize_features(ds)
        np.testing.assert_array_equal(normed.features[:, 1], [0.0, 0.0])

    def test_denormalize_requires_record(self):
        ds = make_blobs(10, 2, rng=RngStream(15))
        with pytest.raises(ValidationError):
            denormalize_features(ds)


class TestCsvInterface:
    def test_round_trip_with_sidecar(self, tmp_path):
        ds = normalize_features(make_blobs(30, 3, rng=RngStream(16)))
        path = tmp_path / "blobs.csv"
        save_dataset(ds, path)
        assert (tmp_path / "blobs.csv.norm.json").exists()
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.features, ds.features)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        np.testing.assert_array_equal(loaded.normalization, ds.normalization)

    def test_round_trip_without_sidecar(self, tmp_path):
        ds = make_blobs(12, 2, rng=RngStream(17))
        path = tmp_path / "plain.csv"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.normalization is None
        np.testing.assert_array_equal(loaded.features, ds.features)

    def test_header_required(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("1.0,2.0,0\n")
        with pytest.raises(ValidationError):
            load_dataset(path)


class TestDatasetValidation:
    def test_label_range_checked(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 2)), np.array([0, 5]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[np.nan, 1.0]]), np.array([0]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((3, 2)), np.array([0, 1]))
