"""
Pydantic models for unmixing data structures.

This module defines type-safe models for every data structure used across the
package: spectral cubes, endmember and abundance matrices, residual dictionaries,
the ADMM split problem and its reports, unmixing specifications and results,
synthetic scene descriptions, and evaluation reports. Array fields are coerced to
float64 numpy arrays and frozen (read-only) on construction.
"""

from enum import Enum
import math
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    computed_field,
    field_validator,
    model_validator,
)

from resunmix.config import UnmixConfig, get_config

from .validators import validate_matrix

ANC_TOLERANCE = 1e-9
ASC_TOLERANCE = 1e-6

_ARRAY_MODEL = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


class SpectralCube(BaseModel):
    """
    Matrix of pixel spectra with image geometry.

    Attributes:
        data: L x N reflectance matrix, one pixel per column (row-major pixel order)
        rows: Image height in pixels
        cols: Image width in pixels
    """

    data: np.ndarray = Field(..., description="L x N reflectance matrix")
    rows: int = Field(..., ge=1, description="Image rows")
    cols: int = Field(..., ge=1, description="Image columns")

    model_config = _ARRAY_MODEL

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v):
        """Coerce to a finite read-only matrix with at least two bands."""
        return _readonly(validate_matrix(v, "cube data", min_rows=2))

    @model_validator(mode="after")
    def check_geometry(self) -> "SpectralCube":
        """Ensure rows * cols matches the pixel count."""
        if self.rows * self.cols != self.data.shape[1]:
            raise ValueError(
                f"Geometry {self.rows}x{self.cols} does not match {self.data.shape[1]} pixels"
            )
        return self

    @classmethod
    def from_matrix(
        cls, data, rows: Optional[int] = None, cols: Optional[int] = None
    ) -> "SpectralCube":
        """Wrap a matrix, defaulting to a single-row image."""
        n_pixels = np.shape(data)[1] if np.ndim(data) == 2 else 0
        if rows is None and cols is None:
            rows, cols = 1, n_pixels
        elif rows is None:
            rows = n_pixels // cols if cols else 0
        elif cols is None:
            cols = n_pixels // rows if rows else 0
        return cls(data=data, rows=rows, cols=cols)

    @property
    def n_bands(self) -> int:
        return self.data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[1]

    def to_image(self, values: np.ndarray) -> np.ndarray:
        """Reshape a length-N per-pixel vector to the rows x cols grid."""
        return np.asarray(values).reshape(self.rows, self.cols)


class EndmemberMatrix(BaseModel):
    """
    Known endmember signatures.

    Attributes:
        data: L x R nonnegative matrix, one endmember per column
    """

    data: np.ndarray = Field(..., description="L x R endmember matrix")

    model_config = _ARRAY_MODEL

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v):
        """Endmembers are finite, nonnegative and pairwise distinct, R >= 2."""
        arr = validate_matrix(v, "endmember data", min_cols=2)
        if np.any(arr < 0):
            raise ValueError("endmember data must be nonnegative")
        if np.unique(arr, axis=1).shape[1] != arr.shape[1]:
            raise ValueError("endmember columns must be pairwise distinct")
        return _readonly(arr)

    @property
    def n_bands(self) -> int:
        return self.data.shape[0]

    @property
    def n_endmembers(self) -> int:
        return self.data.shape[1]


class MultiIndex(BaseModel):
    """
    Exponent vector of one interaction spectrum.

    Attributes:
        k: Per-endmember exponents, summing to the interaction order
    """

    k: Tuple[int, ...] = Field(..., description="Per-endmember exponents")

    model_config = ConfigDict(frozen=True)

    @field_validator("k")
    @classmethod
    def check_exponents(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("k cannot be empty")
        if any(e < 0 for e in v):
            raise ValueError("exponents must be nonnegative")
        if sum(v) < 2:
            raise ValueError("interaction order must be >= 2")
        return v

    @computed_field
    @property
    def order(self) -> int:
        """Interaction order i = sum of exponents."""
        return sum(self.k)

    @property
    def is_pure_power(self) -> bool:
        return max(self.k) == self.order

    @property
    def label(self) -> str:
        """Readable name such as m1*m2, m1^2 or m1^2*m3."""
        parts = []
        for r, e in enumerate(self.k, start=1):
            if e == 1:
                parts.append(f"m{r}")
            elif e > 1:
                parts.append(f"m{r}^{e}")
        return "*".join(parts)


class InteractionDictionary(BaseModel):
    """
    Weighted Hadamard products of endmembers up to order K.

    Attributes:
        Q: L x D_K interaction spectra
        indices: Multi-index of every column
        K: Maximum interaction order
        R: Number of endmembers
    """

    Q: np.ndarray = Field(..., description="L x D_K interaction matrix")
    indices: List[MultiIndex] = Field(..., description="Multi-index per column")
    K: int = Field(..., ge=2, description="Maximum interaction order")
    R: int = Field(..., ge=1, description="Number of endmembers")

    model_config = _ARRAY_MODEL

    @field_validator("Q", mode="before")
    @classmethod
    def coerce_q(cls, v):
        return _readonly(validate_matrix(v, "interaction matrix"))

    @model_validator(mode="after")
    def check_indices(self) -> "InteractionDictionary":
        if len(self.indices) != self.Q.shape[1]:
            raise ValueError(f"{len(self.indices)} indices for {self.Q.shape[1]} columns")
        for idx in self.indices:
            if len(idx.k) != self.R:
                raise ValueError(f"multi-index {idx.k} does not have {self.R} entries")
            if idx.order > self.K:
                raise ValueError(f"multi-index {idx.k} exceeds order {self.K}")
        return self

    @property
    def size(self) -> int:
        return self.Q.shape[1]

    @property
    def labels(self) -> List[str]:
        return [idx.label for idx in self.indices]


class SmoothDictionary(BaseModel):
    """
    Leading orthonormal DCT-II basis vectors.

    Attributes:
        basis: L x D matrix, column d is DCT row d (column 0 is the DC vector)
    """

    basis: np.ndarray = Field(..., description="L x D orthonormal DCT basis")

    model_config = _ARRAY_MODEL

    @field_validator("basis", mode="before")
    @classmethod
    def coerce_basis(cls, v):
        arr = validate_matrix(v, "DCT basis")
        if arr.shape[1] > arr.shape[0]:
            raise ValueError(f"D={arr.shape[1]} exceeds L={arr.shape[0]}")
        return _readonly(arr)

    @property
    def D(self) -> int:
        return self.basis.shape[1]

    @property
    def n_bands(self) -> int:
        return self.basis.shape[0]


class AbundanceMatrix(BaseModel):
    """
    Per-pixel abundance vectors on the probability simplex.

    Attributes:
        data: R x N matrix satisfying ANC (>= -1e-9) and ASC (column sums 1 +- 1e-6)
    """

    data: np.ndarray = Field(..., description="R x N abundance matrix")

    model_config = _ARRAY_MODEL

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v):
        arr = validate_matrix(v, "abundance data")
        if arr.min() < -ANC_TOLERANCE:
            raise ValueError(f"abundances violate nonnegativity (min {arr.min():.3e})")
        sums = arr.sum(axis=0)
        worst = np.max(np.abs(sums - 1.0))
        if worst > ASC_TOLERANCE:
            raise ValueError(f"abundance columns must sum to 1 (max deviation {worst:.3e})")
        return _readonly(arr)

    @property
    def n_endmembers(self) -> int:
        return self.data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[1]


class ResidualCoefficients(BaseModel):
    """
    Residual coefficients of the nonlinear (NL) or mismodelling (ME) term.

    Attributes:
        data: D x N coefficient matrix
        kind: NL (nonnegative interaction weights) or ME (DCT coefficients)
    """

    data: np.ndarray = Field(..., description="D x N coefficient matrix")
    kind: Literal["NL", "ME"] = Field(..., description="Residual model kind")

    model_config = _ARRAY_MODEL

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v):
        return _readonly(validate_matrix(v, "residual coefficients"))

    @model_validator(mode="after")
    def check_sign(self) -> "ResidualCoefficients":
        if self.kind == "NL" and self.data.min() < -ANC_TOLERANCE:
            raise ValueError("NL coefficients must be nonnegative")
        return self


# ---------------------------------------------------------------------------
# ADMM split problem
# ---------------------------------------------------------------------------


class TermKind(str, Enum):
    """Convex term g_j of the split objective."""

    QUADRATIC = "quadratic"
    L1 = "l1"
    L21 = "l21"
    NONNEG = "nonneg"
    SUM_TO_ONE = "sum_to_one"


class Selection(str, Enum):
    """Row-selection operator H_j applied to the stacked iterate Z."""

    IDENTITY = "identity"
    ABUNDANCE_ROWS = "abundance_rows"
    RESIDUAL_ROWS = "residual_rows"


class SplitTerm(BaseModel):
    """
    One term g_j(H_j Z) of the split objective.

    Attributes:
        kind: Convex function type
        selection: Row selection H_j
        weight: Regularization weight (tau) for L1/L21 terms
        observations: Y (L x N), quadratic terms only
        operator: Stacked [M, P] (L x (R+D)), quadratic terms only
    """

    kind: TermKind
    selection: Selection
    weight: float = Field(0.0, ge=0, allow_inf_nan=False)
    observations: Optional[np.ndarray] = None
    operator: Optional[np.ndarray] = None

    model_config = _ARRAY_MODEL

    @field_validator("observations", "operator", mode="before")
    @classmethod
    def coerce_arrays(cls, v):
        if v is None:
            return v
        return _readonly(validate_matrix(v, "quadratic term data"))

    @model_validator(mode="after")
    def check_block(self) -> "SplitTerm":
        if self.kind == TermKind.QUADRATIC:
            if self.observations is None or self.operator is None:
                raise ValueError("quadratic term requires observations and operator")
            if self.observations.shape[0] != self.operator.shape[0]:
                raise ValueError(
                    f"observations have {self.observations.shape[0]} bands, "
                    f"operator has {self.operator.shape[0]}"
                )
            if self.selection != Selection.IDENTITY:
                raise ValueError("quadratic term must act on the full iterate")
        if self.kind == TermKind.SUM_TO_ONE and self.selection != Selection.ABUNDANCE_ROWS:
            raise ValueError("sum-to-one term must act on abundance rows")
        return self

    def block_rows(self, n_endmembers: int, n_residual: int) -> int:
        """Row count of H_j Z."""
        if self.selection == Selection.IDENTITY:
            return n_endmembers + n_residual
        if self.selection == Selection.ABUNDANCE_ROWS:
            return n_endmembers
        return n_residual


def gram_diagonal(terms: List[SplitTerm], n_endmembers: int, n_residual: int) -> np.ndarray:
    """Diagonal of G = sum_j H_j^T H_j for row-selection operators."""
    G = np.zeros(n_endmembers + n_residual)
    for term in terms:
        if term.selection in (Selection.IDENTITY, Selection.ABUNDANCE_ROWS):
            G[:n_endmembers] += 1.0
        if term.selection in (Selection.IDENTITY, Selection.RESIDUAL_ROWS):
            G[n_endmembers:] += 1.0
    return G


class SplitProblem(BaseModel):
    """
    Sum of J convex terms over the stacked iterate Z = [A; X].

    Attributes:
        method: Assembling method (nusal, rusal, linear)
        terms: Ordered split terms
        n_endmembers: R
        n_residual: D (0 for the linear baseline)
        n_pixels: N
        n_bands: L
        gram: Diagonal of G, strictly positive
        endmembers: M (L x R)
        residual_basis: P (L x D), None when D = 0
        dictionary: Interaction dictionary metadata for NL problems
    """

    method: str
    terms: List[SplitTerm] = Field(..., min_length=1)
    n_endmembers: int = Field(..., ge=1)
    n_residual: int = Field(..., ge=0)
    n_pixels: int = Field(..., ge=1)
    n_bands: int = Field(..., ge=1)
    gram: np.ndarray
    endmembers: np.ndarray
    residual_basis: Optional[np.ndarray] = None
    dictionary: Optional[InteractionDictionary] = None

    model_config = _ARRAY_MODEL

    @field_validator("gram", "endmembers", "residual_basis", mode="before")
    @classmethod
    def freeze_arrays(cls, v):
        if v is None:
            return v
        return _readonly(np.asarray(v, dtype=np.float64))

    @model_validator(mode="after")
    def check_gram(self) -> "SplitProblem":
        expected = gram_diagonal(self.terms, self.n_endmembers, self.n_residual)
        if self.gram.shape != expected.shape or not np.array_equal(self.gram, expected):
            raise ValueError("gram diagonal does not match the term selections")
        if np.any(self.gram <= 0):
            raise ValueError("G must have full rank: every row of Z needs a selecting term")
        return self

    @classmethod
    def from_terms(
        cls,
        method: str,
        terms: List[SplitTerm],
        endmembers: np.ndarray,
        residual_basis: Optional[np.ndarray] = None,
        dictionary: Optional[InteractionDictionary] = None,
    ) -> "SplitProblem":
        """Build a problem, deriving dimensions and G from the terms."""
        quadratic = next(t for t in terms if t.kind == TermKind.QUADRATIC)
        n_endmembers = endmembers.shape[1]
        n_residual = 0 if residual_basis is None else residual_basis.shape[1]
        return cls(
            method=method,
            terms=terms,
            n_endmembers=n_endmembers,
            n_residual=n_residual,
            n_pixels=quadratic.observations.shape[1],
            n_bands=quadratic.observations.shape[0],
            gram=gram_diagonal(terms, n_endmembers, n_residual),
            endmembers=endmembers,
            residual_basis=residual_basis,
            dictionary=dictionary,
        )

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        """(R, D, N, L)."""
        return self.n_endmembers, self.n_residual, self.n_pixels, self.n_bands

    @property
    def quadratic(self) -> SplitTerm:
        return next(t for t in self.terms if t.kind == TermKind.QUADRATIC)


class SolverOptions(BaseModel):
    """
    ADMM solver settings.

    Attributes:
        mu0: Initial penalty
        max_iter: Iteration cap
        tol: Stopping tolerance, scaled by sqrt((R+D) N)
        adapt_ratio: Primal/dual ratio that triggers a penalty change
        adapt_factor: Multiplicative penalty change
        adapt: Enable penalty adaptation
        adapt_period: Iterations between penalty updates
        adapt_max_changes: Penalty changes allowed before mu is frozen
        require_both: Stop only when both residuals are below threshold
        record_history: Keep per-iteration diagnostics
    """

    mu0: float = Field(0.05, gt=0, allow_inf_nan=False)
    max_iter: int = Field(1000, gt=0)
    tol: float = Field(1e-5, gt=0, allow_inf_nan=False)
    adapt_ratio: float = Field(10.0, gt=0, allow_inf_nan=False)
    adapt_factor: float = Field(2.0, gt=1, allow_inf_nan=False)
    adapt: bool = True
    adapt_period: int = Field(10, gt=0)
    adapt_max_changes: int = Field(10, ge=0)
    require_both: bool = True
    record_history: bool = False

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_config(cls, config: Optional[UnmixConfig] = None, **overrides) -> "SolverOptions":
        """Build options from configuration defaults, with explicit overrides."""
        if config is None:
            config = get_config()
        values = {
            "mu0": config.solver_mu0,
            "max_iter": config.solver_max_iter,
            "tol": config.solver_tol,
            "adapt_ratio": config.solver_adapt_ratio,
            "adapt_factor": config.solver_adapt_factor,
            "adapt": config.solver_adapt,
            "adapt_period": config.solver_adapt_period,
            "adapt_max_changes": config.solver_adapt_max_changes,
            "require_both": config.solver_require_both,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class IterationRecord(BaseModel):
    """One row of the solver history."""

    iteration: int
    primal: float
    dual: float
    mu: float
    objective: float

    model_config = ConfigDict(frozen=True)


class SolverReport(BaseModel):
    """
    Outcome of one ADMM solve.

    Attributes:
        converged: Stopping rule met before max_iter
        iterations: Iterations performed
        primal_residual: Final primal residual norm
        dual_residual: Final dual residual norm
        threshold: Residual threshold used by the stopping rule
        objective: Data term plus regularization at the final Z
        max_violation: Largest constraint violation of the final Z
        mu: Final penalty
        penalty_changes: Number of times mu was adapted
        runtime_s: Wall time in seconds
        history: Per-iteration records, if requested
    """

    converged: bool
    iterations: int = Field(..., ge=0)
    primal_residual: float
    dual_residual: float
    threshold: float
    objective: float
    max_violation: float
    mu: float
    penalty_changes: int = Field(0, ge=0)
    runtime_s: float = Field(..., ge=0)
    history: List[IterationRecord] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Unmixing specification and results
# ---------------------------------------------------------------------------


class NusalMethod(BaseModel):
    """Nonlinear unmixing with interaction terms up to order K."""

    kind: Literal["nusal"] = "nusal"
    order: int = Field(2, ge=2, description="Maximum interaction order K")

    model_config = ConfigDict(frozen=True)


class RusalMethod(BaseModel):
    """Robust unmixing with a smooth DCT residual of dimension D."""

    kind: Literal["rusal"] = "rusal"
    dct_dim: int = Field(20, ge=1, description="Number of DCT basis vectors D")

    model_config = ConfigDict(frozen=True)


class LinearMethod(BaseModel):
    """Fully constrained linear unmixing."""

    kind: Literal["linear"] = "linear"

    model_config = ConfigDict(frozen=True)


UnmixMethod = Annotated[
    Union[NusalMethod, RusalMethod, LinearMethod], Field(discriminator="kind")
]


class UnmixSpec(BaseModel):
    """
    What to solve and how.

    Attributes:
        method: NUSAL-K, RUSAL or the linear baseline
        tau1: l1 weight on the residual coefficients
        tau2: l21 weight on the residual coefficients
        solver: ADMM settings
    """

    method: UnmixMethod
    tau1: float = Field(0.05, ge=0, allow_inf_nan=False)
    tau2: float = Field(0.05, ge=0, allow_inf_nan=False)
    solver: SolverOptions = Field(default_factory=SolverOptions)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_order_cap(self, info: ValidationInfo) -> "UnmixSpec":
        if isinstance(self.method, NusalMethod):
            cap = (info.context or {}).get("max_interaction_order")
            if cap is None:
                cap = get_config().max_interaction_order
            if self.method.order > cap:
                raise ValueError(f"order {self.method.order} exceeds the configured cap {cap}")
        return self

    @classmethod
    def for_method(
        cls,
        method: Union[NusalMethod, RusalMethod, LinearMethod],
        tau1: Optional[float] = None,
        tau2: Optional[float] = None,
        solver: Optional[SolverOptions] = None,
        config: Optional[UnmixConfig] = None,
    ) -> "UnmixSpec":
        """Build a spec, filling unset weights with the per-method defaults."""
        if config is None:
            config = get_config()
        if isinstance(method, RusalMethod):
            default1, default2 = config.rusal_tau1, config.rusal_tau2
        elif isinstance(method, NusalMethod):
            default1, default2 = config.nusal_tau1, config.nusal_tau2
        else:
            default1 = default2 = 0.0
        return cls.model_validate(
            {
                "method": method,
                "tau1": default1 if tau1 is None else tau1,
                "tau2": default2 if tau2 is None else tau2,
                "solver": solver if solver is not None else SolverOptions.from_config(config),
            },
            context={"max_interaction_order": config.max_interaction_order},
        )


class UnmixResult(BaseModel):
    """
    Unpacked solution of one unmixing run.

    Attributes:
        spec: Specification that produced the result
        abundances: Estimated abundances
        residual_coeffs: Residual coefficients (None for the linear baseline)
        reconstruction: Y_hat = M A + P X
        residual_term: P X (L x N)
        report: Solver report
        dictionary: Interaction dictionary for NUSAL runs
    """

    spec: UnmixSpec
    abundances: AbundanceMatrix
    residual_coeffs: Optional[ResidualCoefficients] = None
    reconstruction: SpectralCube
    residual_term: np.ndarray
    report: SolverReport
    dictionary: Optional[InteractionDictionary] = None

    model_config = _ARRAY_MODEL

    @field_validator("residual_term", mode="before")
    @classmethod
    def freeze_residual(cls, v):
        return _readonly(validate_matrix(v, "residual term"))


class GridPoint(BaseModel):
    """Score of one (tau1, tau2) grid point."""

    tau1: float
    tau2: float
    score: float
    converged: bool

    model_config = ConfigDict(frozen=True)


class GridSearchResult(BaseModel):
    """
    Outcome of a tau grid search.

    Attributes:
        criterion: "armse" when ground truth was supplied, else "re"
        points: Scores in grid order
        best: Result of the selected grid point
    """

    criterion: Literal["armse", "re"]
    points: List[GridPoint]
    best: UnmixResult

    model_config = _ARRAY_MODEL

    @property
    def best_point(self) -> GridPoint:
        return min(self.points, key=lambda p: p.score)


# ---------------------------------------------------------------------------
# Synthetic scenes
# ---------------------------------------------------------------------------


class LMMClass(BaseModel):
    """Linear mixing, no residual."""

    kind: Literal["lmm"] = "lmm"

    model_config = ConfigDict(frozen=True)

    @property
    def name(self) -> str:
        return "LMM"


class NLKClass(BaseModel):
    """Interaction terms up to order K with truncated-Gaussian weights."""

    kind: Literal["nlk"] = "nlk"
    order: int = Field(3, ge=2)
    gamma_sigma2: float = Field(0.1, gt=0)

    model_config = ConfigDict(frozen=True)

    @property
    def name(self) -> str:
        return f"NL-{self.order}"


class GBMClass(BaseModel):
    """Generalized bilinear model with uniform interaction coefficients."""

    kind: Literal["gbm"] = "gbm"
    coeff_lo: float = Field(0.8, ge=0, le=1)
    coeff_hi: float = Field(1.0, ge=0, le=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_range(self) -> "GBMClass":
        if self.coeff_hi < self.coeff_lo:
            raise ValueError("coeff_hi must be >= coeff_lo")
        return self

    @property
    def name(self) -> str:
        return "GBM"


class PPNMMClass(BaseModel):
    """Polynomial post-nonlinear mixing."""

    kind: Literal["ppnmm"] = "ppnmm"
    b: float = Field(0.5, ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def name(self) -> str:
        return "PPNMM"


class EVClass(BaseModel):
    """Endmember variability through smooth per-pixel perturbations."""

    kind: Literal["ev"] = "ev"
    eps2: float = Field(0.001, gt=0)
    corr_len: Optional[float] = Field(None, gt=0, description="Defaults to L/20")

    model_config = ConfigDict(frozen=True)

    @property
    def name(self) -> str:
        return "EV"


class MEClass(BaseModel):
    """Smooth additive mismodelling residual."""

    kind: Literal["me"] = "me"
    eps2: float = Field(0.002, gt=0)
    corr_len: Optional[float] = Field(None, gt=0, description="Defaults to L/20")

    model_config = ConfigDict(frozen=True)

    @property
    def name(self) -> str:
        return "ME"


ClassModel = Annotated[
    Union[LMMClass, NLKClass, GBMClass, PPNMMClass, EVClass, MEClass],
    Field(discriminator="kind"),
]


class SceneSpec(BaseModel):
    """
    Recipe for a synthetic scene.

    Attributes:
        rows: Image rows
        cols: Image columns
        n_bands: L
        n_endmembers: R
        classes: Mixing model of each spatial class
        beta: Potts granularity
        snr_db: Target signal-to-noise ratio
        seed: 64-bit seed; the whole scene is a pure function of this spec
    """

    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    n_bands: int = Field(..., ge=8)
    n_endmembers: int = Field(..., ge=2)
    classes: List[ClassModel] = Field(..., min_length=1)
    beta: float = Field(0.8, ge=0, allow_inf_nan=False)
    snr_db: float = Field(25.0, allow_inf_nan=False)
    seed: int = Field(0, ge=0, lt=2**64)

    model_config = ConfigDict(frozen=True)

    @property
    def class_names(self) -> List[str]:
        return [c.name for c in self.classes]


class GroundTruth(BaseModel):
    """
    Synthetic scene with every generating quantity.

    Attributes:
        spec: Scene recipe
        labels: rows x cols class map (0-based class ids)
        endmembers: Endmember matrix used for mixing
        abundances: True abundances
        residuals: L x N residual term (observed minus M A, noise excluded)
        clean: Noise-free cube
        noisy: Observed cube
        sigma2: Noise variance
    """

    spec: SceneSpec
    labels: np.ndarray
    endmembers: EndmemberMatrix
    abundances: AbundanceMatrix
    residuals: np.ndarray
    clean: SpectralCube
    noisy: SpectralCube
    sigma2: float = Field(..., ge=0)

    model_config = _ARRAY_MODEL

    @field_validator("labels", mode="before")
    @classmethod
    def freeze_labels(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 2:
            raise ValueError("labels must be a rows x cols map")
        return _readonly(arr.astype(np.int64))

    @field_validator("residuals", mode="before")
    @classmethod
    def freeze_residuals(cls, v):
        return _readonly(validate_matrix(v, "residuals"))

    @property
    def class_names(self) -> List[str]:
        return self.spec.class_names

    def class_residuals(self, class_id: int) -> np.ndarray:
        """Residual columns of the pixels in one class."""
        return self.residuals[:, self.labels.ravel() == class_id]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class MetricsReport(BaseModel):
    """
    Quality metrics of one unmixing run.

    Attributes:
        armse: Abundance RMSE (None without ground truth)
        per_class_rmse: Abundance RMSE per spatial class
        re: Reconstruction error
        sam_rad: Mean spectral angle in radians
        runtime_s: Solver wall time
    """

    armse: Optional[float] = Field(None, ge=0)
    per_class_rmse: Dict[str, float] = Field(default_factory=dict)
    re: float = Field(..., ge=0)
    sam_rad: float = Field(..., ge=0)
    runtime_s: float = Field(0.0, ge=0)

    @computed_field
    @property
    def sam_deg(self) -> float:
        """Mean spectral angle in degrees."""
        return math.degrees(self.sam_rad)
