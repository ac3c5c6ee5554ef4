"""
Residual dictionaries and forward models.

Builds the interaction dictionary Q^(K) of weighted Hadamard products of
endmembers, the truncated DCT basis used for smooth residuals, and evaluates the
stacked forward model [M, P] Z.
"""

from itertools import combinations_with_replacement
import logging
import math
from typing import List, Optional

import numpy as np
from scipy import fft

from resunmix.config import UnmixConfig, get_config

from .models import (
    EndmemberMatrix,
    InteractionDictionary,
    MultiIndex,
    SmoothDictionary,
    SpectralCube,
)
from .validators import validate_matrix, validate_order, validate_positive_int

logger = logging.getLogger(__name__)

# Largest dictionary size representable as a platform (int64) integer
_PLATFORM_INT_MAX = np.iinfo(np.int64).max


def count_interactions(R: int, K: int) -> int:
    """
    Number of interaction spectra D_K of orders 2..K for R endmembers.

    Each order i contributes C(R+i-1, i) monomials; the binomials are built with
    the exact integer recurrence C(R+i-1, i) = C(R+i-2, i-1) * (R+i-1) / i.

    Args:
        R: Number of endmembers (>= 1)
        K: Maximum interaction order (>= 2)

    Returns:
        D_K

    Raises:
        ValueError: If R < 1 or K < 2
        OverflowError: If D_K does not fit a platform integer
    """
    validate_positive_int(R, "R")
    validate_order(K)

    total = 0
    binom = 1  # C(R-1, 0)
    for i in range(1, K + 1):
        binom = binom * (R + i - 1) // i
        if i >= 2:
            total += binom
        if total > _PLATFORM_INT_MAX or binom > _PLATFORM_INT_MAX:
            raise OverflowError(f"D_K for R={R}, K={K} exceeds the platform integer range")
    return total


def enumerate_multi_indices(R: int, K: int) -> List[MultiIndex]:
    """
    Canonical column ordering of Q^(K).

    Orders ascend from 2 to K. Within an order, cross terms come first, sorted by
    the lexicographic order of their sorted endmember indices (m12, m13, m23 or
    m112, m113, m122, m123, ...), followed by the pure powers m_r^i in ascending r.

    Args:
        R: Number of endmembers
        K: Maximum interaction order

    Returns:
        count_interactions(R, K) distinct multi-indices
    """
    count_interactions(R, K)

    indices: List[MultiIndex] = []
    for order in range(2, K + 1):
        cross = []
        for combo in combinations_with_replacement(range(R), order):
            k = [0] * R
            for r in combo:
                k[r] += 1
            if max(k) < order:
                cross.append(MultiIndex(k=tuple(k)))
        indices.extend(cross)
        for r in range(R):
            k = [0] * R
            k[r] = order
            indices.append(MultiIndex(k=tuple(k)))
    return indices


def interaction_coefficient(idx: MultiIndex) -> float:
    """
    Kernel weight sqrt(i! / prod_r k_r!) of one interaction spectrum.

    Squared weights are multinomial coefficients, so summing the weighted
    interactions reproduces (M a)^i exactly.
    """
    multinomial = math.factorial(idx.order)
    for e in idx.k:
        multinomial //= math.factorial(e)
    return math.sqrt(multinomial)


def build_interaction_matrix(
    M: EndmemberMatrix, K: int, config: Optional[UnmixConfig] = None
) -> InteractionDictionary:
    """
    Build Q^(K)(M).

    Column d equals interaction_coefficient(idx_d) times the Hadamard product
    m_1^k_1 * ... * m_R^k_R.

    Args:
        M: Endmember matrix
        K: Maximum interaction order
        config: Configuration object (optional, uses global config if not provided)

    Returns:
        InteractionDictionary with column metadata

    Raises:
        MemoryError: If L * D_K float64 entries exceed the configured cap
    """
    if config is None:
        config = get_config()

    L, R = M.data.shape
    size = count_interactions(R, K)
    required = L * size * np.dtype(np.float64).itemsize
    if required > config.max_dictionary_bytes:
        raise MemoryError(
            f"Interaction dictionary for R={R}, K={K} needs {required} bytes "
            f"({L}x{size} float64), above the cap of {config.max_dictionary_bytes} bytes"
        )

    indices = enumerate_multi_indices(R, K)
    Q = np.empty((L, size))
    for d, idx in enumerate(indices):
        exponents = np.asarray(idx.k)
        Q[:, d] = interaction_coefficient(idx) * np.prod(M.data**exponents, axis=1)

    logger.debug(f"Built interaction dictionary L={L}, R={R}, K={K}, D_K={size}")
    return InteractionDictionary(Q=Q, indices=indices, K=K, R=R)


def build_dct_dictionary(L: int, D: int) -> SmoothDictionary:
    """
    First D rows of the orthonormal L-point DCT-II, transposed to L x D.

    Row 1 of the transform is the constant (DC) vector 1/sqrt(L).

    Raises:
        ValueError: If D < 1 or D > L
    """
    validate_positive_int(L, "L")
    validate_positive_int(D, "D")
    if D > L:
        raise ValueError(f"D={D} exceeds the number of bands L={L}")
    transform = fft.dct(np.eye(L), type=2, norm="ortho", axis=0)
    return SmoothDictionary(basis=transform[:D].T)


def stack_operator(M: np.ndarray, P: Optional[np.ndarray] = None) -> np.ndarray:
    """[M, P] (or M alone when P is None or has no columns)."""
    M = np.asarray(M, dtype=np.float64)
    if P is None or np.shape(P)[1] == 0:
        return M
    P = np.asarray(P, dtype=np.float64)
    if P.shape[0] != M.shape[0]:
        raise ValueError(f"P has {P.shape[0]} bands, M has {M.shape[0]}")
    return np.hstack([M, P])


def predict(
    M: EndmemberMatrix,
    P: Optional[np.ndarray],
    Z: np.ndarray,
    rows: Optional[int] = None,
    cols: Optional[int] = None,
) -> SpectralCube:
    """
    Evaluate the forward model [M, P] Z.

    With P empty (D = 0) this is the linear mixing model M A.

    Args:
        M: Endmember matrix
        P: L x D residual dictionary, or None
        Z: (R + D) x N stacked abundances and residual coefficients
        rows: Optional image rows of the output cube
        cols: Optional image columns of the output cube

    Raises:
        ValueError: On dimension mismatch
    """
    Z = validate_matrix(Z, "Z")
    operator = stack_operator(M.data, P)
    if Z.shape[0] != operator.shape[1]:
        raise ValueError(f"Z has {Z.shape[0]} rows, expected R + D = {operator.shape[1]}")
    return SpectralCube.from_matrix(operator @ Z, rows=rows, cols=cols)
