"""Tests for the synthetic dataset generators."""

import numpy as np

from ensopt.data import load_csv
from ensopt.synthetic import gaussian_blobs, to_csv, two_moons


class TestGaussianBlobs:
    def test_class_sizes_within_one(self):
        data = gaussian_blobs(100)
        counts = np.bincount(data.labels, minlength=3)
        assert counts.sum() == 100
        assert counts.max() - counts.min() <= 1

    def test_default_three_classes(self):
        data = gaussian_blobs(30)
        assert data.n_labels == 3
        assert data.n_features == 2

    def test_seed_determinism(self):
        a = gaussian_blobs(60, seed=4)
        b = gaussian_blobs(60, seed=4)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        c = gaussian_blobs(60, seed=5)
        assert not np.array_equal(a.features, c.features)

    def test_classes_concentrate_near_centers(self):
        centers = np.array([[0.0, 0.0], [10.0, 0.0]])
        data = gaussian_blobs(200, centers=centers, spread=0.5, seed=1)
        for c in range(2):
            mean = data.features[data.labels == c].mean(axis=0)
            np.testing.assert_allclose(mean, centers[c], atol=0.3)

    def test_custom_center_count_sets_class_count(self):
        centers = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]])
        data = gaussian_blobs(41, centers=centers, seed=2)
        assert data.n_labels == 4
        assert np.bincount(data.labels).min() >= 10


class TestTwoMoons:
    def test_shapes_and_classes(self):
        data = two_moons(101, seed=3)
        assert data.n_samples == 101
        assert data.n_labels == 2
        counts = np.bincount(data.labels)
        assert abs(int(counts[0]) - int(counts[1])) <= 1

    def test_noise_free_arcs_lie_on_circles(self):
        data = two_moons(400, noise=0.0, seed=6)
        upper = data.features[data.labels == 0]
        radii = np.linalg.norm(upper, axis=1)
        np.testing.assert_allclose(radii, 1.0, atol=1e-12)
        lower = data.features[data.labels == 1]
        radii = np.linalg.norm(lower - np.array([1.0, 0.5]), axis=1)
        np.testing.assert_allclose(radii, 1.0, atol=1e-12)

    def test_seed_determinism(self):
        a = two_moons(50, seed=9)
        b = two_moons(50, seed=9)
        np.testing.assert_array_equal(a.features, b.features)


class TestCsvRoundTrip:
    def test_written_file_loads_back(self, tmp_path):
        data = gaussian_blobs(45, seed=7)
        path = str(tmp_path / "blobs.csv")
        to_csv(data, path)
        loaded = load_csv(path, "label")
        np.testing.assert_allclose(loaded.features, data.features)
        np.testing.assert_array_equal(loaded.labels, data.labels)
        assert loaded.label_names == data.label_names
