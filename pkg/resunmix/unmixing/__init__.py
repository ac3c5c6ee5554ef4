"""
Unmixing package - residual-component hyperspectral unmixing.

Public API:
    - Pydantic models for cubes, dictionaries, split problems and results
    - build_interaction_matrix / build_dct_dictionary: residual dictionaries
    - solve: ADMM engine over row-selection splits
    - unmix / grid_search: NUSAL-K, RUSAL and linear baseline
    - build_scene / preset_scene: synthetic scenes with ground truth
    - armse, reconstruction_error, sam, evaluate: quality metrics
"""

# ADMM engine
from .admm import solve

# Dictionaries
from .dictionaries import (
    build_dct_dictionary,
    build_interaction_matrix,
    count_interactions,
    enumerate_multi_indices,
    interaction_coefficient,
    predict,
    stack_operator,
)

# Metrics
from .metrics import (
    armse,
    evaluate,
    mean_interaction_profile,
    per_class_rmse,
    reconstruction_error,
    residual_energy_map,
    sam,
)

# Pydantic models
from .models import (
    AbundanceMatrix,
    EndmemberMatrix,
    GridSearchResult,
    GroundTruth,
    InteractionDictionary,
    LinearMethod,
    MetricsReport,
    NusalMethod,
    ResidualCoefficients,
    RusalMethod,
    SceneSpec,
    SolverOptions,
    SolverReport,
    SpectralCube,
    UnmixResult,
    UnmixSpec,
)

# Proximity operators
from .prox import (
    prox_l1,
    prox_l21,
    prox_quadratic,
    project_nonneg,
    project_simplex,
    project_sum_to_one,
)

# Synthetic scenes
from .synth import (
    add_noise,
    build_scene,
    generate_endmembers,
    load_endmembers,
    mix_pixel,
    preset_scene,
    sample_abundances,
    sample_potts_labels,
    se_covariance,
)

# Unmixing
from .unmixers import (
    assemble_linear_baseline,
    assemble_nusal,
    assemble_rusal,
    grid_search,
    unmix,
)

__all__ = [
    # Pydantic models
    "SpectralCube",
    "EndmemberMatrix",
    "AbundanceMatrix",
    "ResidualCoefficients",
    "InteractionDictionary",
    "NusalMethod",
    "RusalMethod",
    "LinearMethod",
    "SolverOptions",
    "SolverReport",
    "UnmixSpec",
    "UnmixResult",
    "GridSearchResult",
    "SceneSpec",
    "GroundTruth",
    "MetricsReport",
    # ADMM engine
    "solve",
    # Dictionaries
    "count_interactions",
    "enumerate_multi_indices",
    "interaction_coefficient",
    "build_interaction_matrix",
    "build_dct_dictionary",
    "stack_operator",
    "predict",
    # Proximity operators
    "prox_quadratic",
    "prox_l1",
    "prox_l21",
    "project_nonneg",
    "project_sum_to_one",
    "project_simplex",
    # Unmixing
    "assemble_nusal",
    "assemble_rusal",
    "assemble_linear_baseline",
    "unmix",
    "grid_search",
    # Synthetic scenes
    "sample_potts_labels",
    "sample_abundances",
    "generate_endmembers",
    "load_endmembers",
    "se_covariance",
    "mix_pixel",
    "add_noise",
    "preset_scene",
    "build_scene",
    # Metrics
    "armse",
    "per_class_rmse",
    "reconstruction_error",
    "sam",
    "residual_energy_map",
    "mean_interaction_profile",
    "evaluate",
]
