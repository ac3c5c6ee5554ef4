"""
resunmix

Supervised hyperspectral unmixing with residual components: nonlinear
interaction terms (NUSAL-K) or smooth mismodelling residuals (RUSAL), solved by
an ADMM variable-splitting scheme, plus synthetic scene generation and
evaluation metrics.
"""

from .unmixing import grid_search, unmix
from .unmixing.models import (
    AbundanceMatrix,
    EndmemberMatrix,
    GroundTruth,
    LinearMethod,
    MetricsReport,
    NusalMethod,
    RusalMethod,
    SceneSpec,
    SolverOptions,
    SolverReport,
    SpectralCube,
    UnmixResult,
    UnmixSpec,
)

__version__ = "0.1.0"
__all__ = [
    "unmix",
    "grid_search",
    # Pydantic models
    "SpectralCube",
    "EndmemberMatrix",
    "AbundanceMatrix",
    "NusalMethod",
    "RusalMethod",
    "LinearMethod",
    "UnmixSpec",
    "UnmixResult",
    "SolverOptions",
    "SolverReport",
    "SceneSpec",
    "GroundTruth",
    "MetricsReport",
]
