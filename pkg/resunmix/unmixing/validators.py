"""
Input validation functions for unmixing data.

This module provides pure validation functions with no dependencies on other modules.
All functions are stateless and raise ValueError on validation failure.
"""

import logging
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


def validate_positive_int(value: int, name: str, max_value: Optional[int] = None) -> int:
    """
    Validate positive integer input.

    Args:
        value: Value to validate
        name: Name of the parameter (for error messages)
        max_value: Optional maximum allowed value

    Returns:
        Validated integer

    Raises:
        ValueError: If value is invalid
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer")
    if value <= 0:
        raise ValueError(f"{name} must be positive")
    if max_value is not None and value > max_value:
        raise ValueError(f"{name} must be <= {max_value}")
    return int(value)


def validate_order(order: int, max_order: Optional[int] = None) -> int:
    """
    Validate an interaction order K.

    Args:
        order: Maximum interaction order
        max_order: Optional configured cap

    Returns:
        Validated order

    Raises:
        ValueError: If order < 2 or above the cap
    """
    validate_positive_int(order, "order", max_order)
    if order < 2:
        raise ValueError("order must be >= 2")
    return int(order)


def validate_matrix(value, name: str, min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """
    Coerce input to a finite 2-D float64 array.

    Args:
        value: Array-like input
        name: Name of the parameter (for error messages)
        min_rows: Minimum number of rows
        min_cols: Minimum number of columns

    Returns:
        A float64 copy of the input

    Raises:
        ValueError: If the input is not a finite matrix of sufficient size
    """
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be numeric")
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got {arr.ndim} dimension(s)")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} must have at least {min_rows} rows, got {arr.shape[0]}")
    if arr.shape[1] < min_cols:
        raise ValueError(f"{name} must have at least {min_cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def validate_same_shape(
    first: np.ndarray, second: np.ndarray, names: Tuple[str, str] = ("first", "second")
) -> Tuple[int, ...]:
    """
    Validate that two arrays share one shape.

    Returns:
        The common shape

    Raises:
        ValueError: On shape mismatch
    """
    if np.shape(first) != np.shape(second):
        raise ValueError(
            f"Shape mismatch: {names[0]} {np.shape(first)} vs {names[1]} {np.shape(second)}"
        )
    return tuple(np.shape(first))


def validate_geometry(rows: int, cols: int, n_pixels: int) -> Tuple[int, int]:
    """
    Validate an image geometry against a pixel count.

    Raises:
        ValueError: If rows * cols does not equal the pixel count
    """
    validate_positive_int(rows, "rows")
    validate_positive_int(cols, "cols")
    if rows * cols != n_pixels:
        raise ValueError(f"Geometry {rows}x{cols} does not match {n_pixels} pixels")
    return int(rows), int(cols)


def validate_threshold(threshold: float) -> float:
    """Validate a non-negative finite shrinkage threshold."""
    threshold = float(threshold)
    if not np.isfinite(threshold) or threshold < 0:
        raise ValueError(f"threshold must be a non-negative finite number, got {threshold}")
    return threshold
