"""
Tests for quality metrics and diagnostic maps.
"""

import math

import numpy as np
import pytest

from resunmix.unmixing.dictionaries import build_interaction_matrix
from resunmix.unmixing.metrics import (
    armse,
    evaluate,
    mean_interaction_profile,
    per_class_rmse,
    reconstruction_error,
    residual_energy_map,
    sam,
)
from resunmix.unmixing.models import ResidualCoefficients, SpectralCube


class TestArmse:
    """Tests for armse."""

    def test_identical(self, abundances):
        assert armse(abundances, abundances) == 0.0

    def test_swapped_pure_pixel(self):
        assert armse(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == pytest.approx(1.0)

    def test_constant_offset(self):
        a = np.array([[0.1], [0.2], [0.3], [0.4]])
        assert armse(a, a + 0.1) == pytest.approx(0.1)

    def test_symmetric_and_triangle(self, rng):
        A, B, C = (rng.uniform(size=(3, 10)) for _ in range(3))
        assert armse(A, B) == pytest.approx(armse(B, A))
        assert armse(A, C) <= armse(A, B) + armse(B, C) + 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="Shape mismatch"):
            armse(np.ones((2, 3)), np.ones((3, 2)))


class TestPerClassRmse:
    """Tests for per_class_rmse."""

    def test_single_class_equals_armse(self, rng):
        A, B = rng.uniform(size=(3, 12)), rng.uniform(size=(3, 12))
        assert per_class_rmse(A, B, np.zeros(12, dtype=int), 0) == pytest.approx(armse(A, B))

    def test_perfect_class(self, rng):
        A = rng.uniform(size=(2, 6))
        B = A.copy()
        labels = np.array([1, 1, 1, 2, 2, 2])
        B[:, labels == 2] += 0.3
        assert per_class_rmse(A, B, labels, 1) == 0.0
        assert per_class_rmse(A, B, labels, 2) == pytest.approx(0.3)

    def test_matches_masked_recomputation(self):
        rng = np.random.default_rng(9)
        A, B = rng.uniform(size=(3, 40)), rng.uniform(size=(3, 40))
        labels = rng.integers(0, 3, size=(5, 8))
        mask = labels.ravel() == 2
        assert per_class_rmse(A, B, labels, 2) == pytest.approx(armse(A[:, mask], B[:, mask]))

    def test_empty_class(self, rng):
        A = rng.uniform(size=(2, 4))
        with pytest.raises(ValueError, match="class 5 is empty"):
            per_class_rmse(A, A, np.zeros(4, dtype=int), 5)

    def test_label_count_mismatch(self, rng):
        A = rng.uniform(size=(2, 4))
        with pytest.raises(ValueError, match="labels cover 3 pixels"):
            per_class_rmse(A, A, np.zeros(3, dtype=int), 0)


class TestReconstructionError:
    """Tests for reconstruction_error."""

    def test_identical(self, lmm_cube):
        assert reconstruction_error(lmm_cube, lmm_cube) == 0.0

    def test_constant_offset(self, lmm_cube):
        assert reconstruction_error(lmm_cube.data, lmm_cube.data + 0.01) == pytest.approx(0.01)

    def test_matches_loop(self):
        rng = np.random.default_rng(2)
        Y, Y_hat = rng.normal(size=(7, 9)), rng.normal(size=(7, 9))
        total = sum(float(np.sum((Y_hat[:, n] - Y[:, n]) ** 2)) for n in range(9))
        assert reconstruction_error(Y, Y_hat) == pytest.approx(math.sqrt(total / 63))


class TestSam:
    """Tests for the spectral angle mapper."""

    def test_scale_invariant(self, lmm_cube):
        assert sam(lmm_cube.data, 3.0 * lmm_cube.data) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal(self):
        assert sam(np.array([[1.0], [0.0]]), np.array([[0.0], [2.0]])) == pytest.approx(math.pi / 2)

    def test_matches_loop(self):
        rng = np.random.default_rng(4)
        Y, Y_hat = rng.uniform(size=(6, 11)), rng.uniform(size=(6, 11))
        angles = []
        for n in range(11):
            y, y_hat = Y[:, n], Y_hat[:, n]
            angles.append(math.acos(float(y @ y_hat) / (np.linalg.norm(y) * np.linalg.norm(y_hat))))
        assert sam(Y, Y_hat) == pytest.approx(np.mean(angles))

    def test_zero_pixel(self):
        Y = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, 2.0]])
        with pytest.raises(ValueError, match="pixel 1 has a zero-norm spectrum"):
            sam(Y, Y)


class TestMaps:
    """Tests for residual_energy_map and mean_interaction_profile."""

    def test_exact_mixture_is_zero(self, lmm_cube, endmembers, abundances):
        energy = residual_energy_map(lmm_cube, endmembers, abundances)
        assert energy.shape == (5, 5)
        np.testing.assert_allclose(energy, 0.0, atol=1e-12)

    def test_single_perturbed_pixel(self, lmm_cube, endmembers, abundances):
        data = lmm_cube.data.copy()
        data[3, 7] += 0.5
        cube = SpectralCube(data=data, rows=5, cols=5)
        energy = residual_energy_map(cube, endmembers, abundances)
        assert energy[1, 2] == pytest.approx(0.5)
        energy[1, 2] = 0.0
        np.testing.assert_allclose(energy, 0.0, atol=1e-12)

    def test_matches_loop(self, endmembers):
        rng = np.random.default_rng(6)
        A = rng.dirichlet(np.ones(3), size=6).T
        cube = SpectralCube(data=rng.uniform(size=(50, 6)), rows=2, cols=3)
        expected = [np.linalg.norm(cube.data[:, n] - endmembers.data @ A[:, n]) for n in range(6)]
        np.testing.assert_allclose(
            residual_energy_map(cube, endmembers, A), np.reshape(expected, (2, 3))
        )

    def test_energy_shape_mismatch(self, lmm_cube, endmembers):
        with pytest.raises(ValueError, match="Incompatible shapes"):
            residual_energy_map(lmm_cube, endmembers, np.ones((3, 4)))

    def test_profile(self, endmembers):
        dictionary = build_interaction_matrix(endmembers, 2)
        zero = ResidualCoefficients(data=np.zeros((6, 4)), kind="NL")
        np.testing.assert_array_equal(mean_interaction_profile(zero, dictionary), np.zeros(6))

        one_row = np.zeros((6, 4))
        one_row[2] = 1.0
        gamma = ResidualCoefficients(data=one_row, kind="NL")
        profile = mean_interaction_profile(gamma, dictionary)
        np.testing.assert_array_equal(profile, np.eye(6)[2])

    def test_profile_needs_nl(self, endmembers):
        dictionary = build_interaction_matrix(endmembers, 2)
        gamma = ResidualCoefficients(data=np.zeros((6, 2)), kind="ME")
        with pytest.raises(ValueError, match="needs NL coefficients"):
            mean_interaction_profile(gamma, dictionary)

    def test_profile_size_mismatch(self, endmembers):
        dictionary = build_interaction_matrix(endmembers, 2)
        gamma = ResidualCoefficients(data=np.zeros((4, 2)), kind="NL")
        with pytest.raises(ValueError, match="dictionary has 6 columns"):
            mean_interaction_profile(gamma, dictionary)


class TestEvaluate:
    """Tests for evaluate."""

    def test_without_truth(self, lmm_cube):
        report = evaluate(lmm_cube, lmm_cube, np.eye(3)[:, [0] * 25])
        assert report.re == 0.0
        assert report.armse is None
        assert report.per_class_rmse == {}

    def test_with_truth_and_labels(self, lmm_cube, abundances):
        labels = np.zeros((5, 5), dtype=int)
        labels[0] = 1
        report = evaluate(
            lmm_cube,
            lmm_cube,
            abundances,
            A_true=abundances,
            labels=labels,
            class_names=["LMM", "GBM", "EV"],
            runtime_s=1.5,
        )
        assert report.armse == 0.0
        assert set(report.per_class_rmse) == {"LMM", "GBM"}
        assert report.runtime_s == 1.5

    def test_default_class_names(self, lmm_cube, abundances):
        labels = np.arange(25) % 2
        report = evaluate(lmm_cube, lmm_cube, abundances, A_true=abundances, labels=labels)
        assert list(report.per_class_rmse) == ["class0", "class1"]
