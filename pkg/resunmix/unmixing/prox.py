"""
Moreau proximity operators of the split terms.

Each operator solves argmin_U (mu/2)||U - V||^2 + g(U) for one convex term g:
the quadratic data term, the l1 and l21 norms, and the indicators of the
nonnegative orthant and of the sum-to-one affine set.
"""

from typing import Optional

import numpy as np
from scipy import linalg

from .validators import validate_threshold


class QuadraticProx:
    """
    Cached proximity operator of 0.5 ||Y - S U||_F^2 with S = [M, P].

    The Gram matrix S^T S is eigendecomposed once, so evaluating the operator
    for a new penalty mu only rescales the eigenvalues.
    """

    def __init__(self, operator: np.ndarray, observations: np.ndarray):
        operator = np.asarray(operator, dtype=np.float64)
        observations = np.asarray(observations, dtype=np.float64)
        if not (np.all(np.isfinite(operator)) and np.all(np.isfinite(observations))):
            raise FloatingPointError("quadratic term has non-finite operator or observations")
        if operator.shape[0] != observations.shape[0]:
            raise ValueError(
                f"operator has {operator.shape[0]} bands, observations have {observations.shape[0]}"
            )
        self.eigenvalues, self.eigenvectors = linalg.eigh(operator.T @ operator)
        self.correlation = operator.T @ observations

    def __call__(self, V: np.ndarray, mu: float) -> np.ndarray:
        if mu <= 0:
            raise ValueError(f"mu must be positive, got {mu}")
        if not np.all(np.isfinite(V)):
            raise FloatingPointError("non-finite input to the quadratic proximity operator")
        rhs = self.eigenvectors.T @ (self.correlation + mu * V)
        return self.eigenvectors @ (rhs / (self.eigenvalues + mu)[:, None])


def prox_quadratic(
    V1: np.ndarray,
    Y: np.ndarray,
    stacked: np.ndarray,
    mu: float,
    factorization: Optional[QuadraticProx] = None,
) -> np.ndarray:
    """
    Proximity operator of the data term.

    Returns ([M,P]^T [M,P] + mu I)^-1 ([M,P]^T Y + mu V1).

    Args:
        V1: (R+D) x N point
        Y: L x N observations
        stacked: L x (R+D) operator [M, P]
        mu: Penalty (> 0)
        factorization: Precomputed operator for (stacked, Y), reused across calls

    Raises:
        FloatingPointError: On non-finite inputs
    """
    if factorization is None:
        factorization = QuadraticProx(stacked, Y)
    return factorization(np.asarray(V1, dtype=np.float64), mu)


def prox_l1(V: np.ndarray, threshold: float) -> np.ndarray:
    """Soft threshold sign(v) * max(|v| - threshold, 0), element-wise."""
    threshold = validate_threshold(threshold)
    V = np.asarray(V, dtype=np.float64)
    return np.sign(V) * np.maximum(np.abs(V) - threshold, 0.0)


def prox_l21(V: np.ndarray, threshold: float) -> np.ndarray:
    """
    Column-wise vector soft threshold.

    Each column v becomes v * max(||v|| - t, 0) / (max(||v|| - t, 0) + t); zero
    columns stay zero.
    """
    threshold = validate_threshold(threshold)
    V = np.asarray(V, dtype=np.float64)
    norms = np.linalg.norm(V, axis=0)
    shrunk = np.maximum(norms - threshold, 0.0)
    denom = shrunk + threshold
    scale = np.divide(shrunk, denom, out=np.zeros_like(norms), where=denom > 0)
    return V * scale[None, :]


def project_nonneg(V: np.ndarray) -> np.ndarray:
    """Element-wise max(v, 0); negative zeros map to +0.0."""
    V = np.asarray(V, dtype=np.float64)
    return np.where(V > 0, V, 0.0)


def project_sum_to_one(V: np.ndarray) -> np.ndarray:
    """Euclidean projection of every column onto {v : 1^T v = 1}."""
    V = np.asarray(V, dtype=np.float64)
    R = V.shape[0]
    return V - V.mean(axis=0, keepdims=True) + 1.0 / R


def project_simplex(V: np.ndarray) -> np.ndarray:
    """
    Euclidean projection of every column onto the probability simplex.

    Sort-based threshold search: for each column find the largest rho with
    u_rho - (sum_{j<=rho} u_j - 1) / rho > 0 on the descending-sorted column u.
    """
    V = np.asarray(V, dtype=np.float64)
    R = V.shape[0]
    u = -np.sort(-V, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    ranks = np.arange(1, R + 1)[:, None]
    active = u - css / ranks > 0
    rho = R - np.argmax(active[::-1], axis=0)
    theta = css[rho - 1, np.arange(V.shape[1])] / rho
    return np.maximum(V - theta[None, :], 0.0)
