"""
Quality metrics and diagnostic maps for unmixing results.

All functions are pure and accept either numpy arrays or the corresponding
models (AbundanceMatrix, SpectralCube, ...), whose data matrices are used.
"""

import logging
import math
from typing import Dict, List, Optional, Union

import numpy as np

from .models import (
    AbundanceMatrix,
    EndmemberMatrix,
    InteractionDictionary,
    MetricsReport,
    ResidualCoefficients,
    SpectralCube,
)
from .validators import validate_geometry, validate_same_shape

logger = logging.getLogger(__name__)

MatrixLike = Union[np.ndarray, AbundanceMatrix, SpectralCube, EndmemberMatrix]


def _matrix(value: MatrixLike) -> np.ndarray:
    data = getattr(value, "data", value)
    return np.asarray(data, dtype=np.float64)


def _rms(diff: np.ndarray) -> float:
    if diff.size == 0:
        raise ValueError("cannot compute an RMSE over zero entries")
    return math.sqrt(float(np.sum(diff**2)) / diff.size)


def armse(A_true: MatrixLike, A_est: MatrixLike) -> float:
    """
    Abundance root-mean-square error sqrt(sum_n ||a_n - a_hat_n||^2 / (N R)).

    Raises:
        ValueError: On shape mismatch
    """
    A_true, A_est = _matrix(A_true), _matrix(A_est)
    validate_same_shape(A_true, A_est, ("A_true", "A_est"))
    return _rms(A_true - A_est)


def per_class_rmse(
    A_true: MatrixLike, A_est: MatrixLike, labels: np.ndarray, class_id: int
) -> float:
    """
    Abundance RMSE over the pixels whose label equals class_id.

    Raises:
        ValueError: On shape mismatch or when the class has no pixels
    """
    A_true, A_est = _matrix(A_true), _matrix(A_est)
    validate_same_shape(A_true, A_est, ("A_true", "A_est"))
    mask = np.asarray(labels).ravel() == class_id
    if mask.size != A_true.shape[1]:
        raise ValueError(f"labels cover {mask.size} pixels, abundances have {A_true.shape[1]}")
    if not mask.any():
        raise ValueError(f"class {class_id} is empty")
    return _rms(A_true[:, mask] - A_est[:, mask])


def reconstruction_error(Y: MatrixLike, Y_hat: MatrixLike) -> float:
    """Reconstruction error sqrt(sum_n ||y_hat_n - y_n||^2 / (N L))."""
    Y, Y_hat = _matrix(Y), _matrix(Y_hat)
    validate_same_shape(Y, Y_hat, ("Y", "Y_hat"))
    return _rms(Y_hat - Y)


def sam(Y: MatrixLike, Y_hat: MatrixLike) -> float:
    """
    Mean spectral angle in radians.

    The cosine of every pixel pair is clamped to [-1, 1] before arccos.

    Raises:
        ValueError: On shape mismatch or a zero-norm pixel spectrum
    """
    Y, Y_hat = _matrix(Y), _matrix(Y_hat)
    validate_same_shape(Y, Y_hat, ("Y", "Y_hat"))
    norms = np.linalg.norm(Y, axis=0) * np.linalg.norm(Y_hat, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"pixel {int(zero[0])} has a zero-norm spectrum")
    cosines = np.clip(np.sum(Y * Y_hat, axis=0) / norms, -1.0, 1.0)
    return float(np.mean(np.arccos(cosines)))


def residual_energy_map(Y: SpectralCube, M: MatrixLike, A_est: MatrixLike) -> np.ndarray:
    """Per-pixel ||y_n - M a_hat_n|| on the rows x cols grid of Y."""
    M_data, A = _matrix(M), _matrix(A_est)
    if M_data.shape[0] != Y.n_bands or A.shape != (M_data.shape[1], Y.n_pixels):
        raise ValueError(
            f"Incompatible shapes: cube {Y.data.shape}, endmembers {M_data.shape}, "
            f"abundances {A.shape}"
        )
    return Y.to_image(np.linalg.norm(Y.data - M_data @ A, axis=0))


def mean_interaction_profile(
    Gamma: ResidualCoefficients, dictionary: InteractionDictionary
) -> np.ndarray:
    """
    Mean interaction coefficients (1/N) sum_n gamma_n, one entry per dictionary column.

    Raises:
        ValueError: If Gamma is not an NL coefficient matrix of the dictionary's size
    """
    if Gamma.kind != "NL":
        raise ValueError(f"interaction profile needs NL coefficients, got {Gamma.kind}")
    if Gamma.data.shape[0] != dictionary.size:
        raise ValueError(
            f"Gamma has {Gamma.data.shape[0]} rows, dictionary has {dictionary.size} columns"
        )
    return Gamma.data.mean(axis=1)


def evaluate(
    Y: SpectralCube,
    Y_hat: SpectralCube,
    A_est: MatrixLike,
    A_true: Optional[MatrixLike] = None,
    labels: Optional[np.ndarray] = None,
    class_names: Optional[List[str]] = None,
    runtime_s: float = 0.0,
) -> MetricsReport:
    """
    Assemble a MetricsReport.

    Without ground truth only RE and SAM are filled in. Per-class RMSE needs both
    the true abundances and a label map; classes without pixels are skipped.
    """
    report: Dict[str, object] = {
        "re": reconstruction_error(Y, Y_hat),
        "sam_rad": sam(Y, Y_hat),
        "runtime_s": runtime_s,
    }
    if A_true is not None:
        report["armse"] = armse(A_true, A_est)
        if labels is not None:
            labels = np.asarray(labels)
            if labels.ndim == 2:
                validate_geometry(labels.shape[0], labels.shape[1], Y.n_pixels)
            n_classes = int(labels.max()) + 1 if labels.size else 0
            names = class_names or [f"class{c}" for c in range(n_classes)]
            per_class: Dict[str, float] = {}
            for c, name in enumerate(names):
                if not np.any(labels == c):
                    logger.debug(f"Skipping empty class {name}")
                    continue
                per_class[name] = per_class_rmse(A_true, A_est, labels, c)
            report["per_class_rmse"] = per_class
    return MetricsReport(**report)
