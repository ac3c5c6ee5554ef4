"""
Supervised unmixing with residual components.

Assembles the split problems of the three supported methods, runs the ADMM
engine and unpacks the stacked solution:

- NUSAL-K: nonlinear interaction residual P = Q^(K)(M), nonnegative coefficients
  with collaborative sparsity across pixels.
- RUSAL: smooth mismodelling residual P = truncated DCT basis, sparse signed
  coefficients.
- Linear baseline: fully constrained least squares on the simplex.
"""

from concurrent.futures import ThreadPoolExecutor
from itertools import product
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from resunmix.config import UnmixConfig, get_config

from . import admm
from .dictionaries import build_dct_dictionary, build_interaction_matrix
from .metrics import armse, reconstruction_error
from .models import (
    ANC_TOLERANCE,
    ASC_TOLERANCE,
    AbundanceMatrix,
    EndmemberMatrix,
    GridPoint,
    GridSearchResult,
    LinearMethod,
    NusalMethod,
    ResidualCoefficients,
    RusalMethod,
    Selection,
    SolverOptions,
    SolverReport,
    SpectralCube,
    SplitProblem,
    SplitTerm,
    TermKind,
    UnmixResult,
    UnmixSpec,
)
from .prox import project_simplex

logger = logging.getLogger(__name__)


def _check_bands(Y: SpectralCube, M: EndmemberMatrix):
    if Y.n_bands != M.n_bands:
        raise ValueError(f"Cube has {Y.n_bands} bands, endmembers have {M.n_bands}")


def _data_term(Y: SpectralCube, operator: np.ndarray) -> SplitTerm:
    return SplitTerm(
        kind=TermKind.QUADRATIC,
        selection=Selection.IDENTITY,
        observations=Y.data,
        operator=operator,
    )


def _sparsity_terms(spec: UnmixSpec) -> List[SplitTerm]:
    return [
        SplitTerm(kind=TermKind.L1, selection=Selection.RESIDUAL_ROWS, weight=spec.tau1),
        SplitTerm(kind=TermKind.L21, selection=Selection.RESIDUAL_ROWS, weight=spec.tau2),
    ]


def assemble_nusal(Y: SpectralCube, M: EndmemberMatrix, spec: UnmixSpec) -> SplitProblem:
    """
    Split problem of NUSAL-K.

    Terms: data fit on all of Z, l1 and l21 on the interaction coefficients,
    nonnegativity on all of Z and sum-to-one on the abundances, which gives
    G = diag[3 * 1_R, 4 * 1_{D_K}].

    Raises:
        ValueError: If spec is not a NUSAL spec or the band counts differ
        MemoryError: If the interaction dictionary exceeds the configured cap
    """
    if not isinstance(spec.method, NusalMethod):
        raise ValueError(f"assemble_nusal needs a NUSAL spec, got {spec.method.kind}")
    _check_bands(Y, M)

    dictionary = build_interaction_matrix(M, spec.method.order)
    operator = np.hstack([M.data, dictionary.Q])
    terms = [
        _data_term(Y, operator),
        *_sparsity_terms(spec),
        SplitTerm(kind=TermKind.NONNEG, selection=Selection.IDENTITY),
        SplitTerm(kind=TermKind.SUM_TO_ONE, selection=Selection.ABUNDANCE_ROWS),
    ]
    return SplitProblem.from_terms(
        "nusal", terms, M.data, residual_basis=dictionary.Q, dictionary=dictionary
    )


def assemble_rusal(Y: SpectralCube, M: EndmemberMatrix, spec: UnmixSpec) -> SplitProblem:
    """
    Split problem of RUSAL.

    Terms: data fit on all of Z, l1 and l21 on the DCT coefficients, and
    nonnegativity plus sum-to-one on the abundances only, which gives
    G = 3 * I_{R+D}.

    Raises:
        ValueError: If spec is not a RUSAL spec, D > L or the band counts differ
    """
    if not isinstance(spec.method, RusalMethod):
        raise ValueError(f"assemble_rusal needs a RUSAL spec, got {spec.method.kind}")
    _check_bands(Y, M)

    basis = build_dct_dictionary(Y.n_bands, spec.method.dct_dim).basis
    operator = np.hstack([M.data, basis])
    terms = [
        _data_term(Y, operator),
        *_sparsity_terms(spec),
        SplitTerm(kind=TermKind.NONNEG, selection=Selection.ABUNDANCE_ROWS),
        SplitTerm(kind=TermKind.SUM_TO_ONE, selection=Selection.ABUNDANCE_ROWS),
    ]
    return SplitProblem.from_terms("rusal", terms, M.data, residual_basis=basis)


def assemble_linear_baseline(Y: SpectralCube, M: EndmemberMatrix) -> SplitProblem:
    """Fully constrained linear unmixing: data fit, nonnegativity and sum-to-one."""
    _check_bands(Y, M)
    terms = [
        _data_term(Y, M.data),
        SplitTerm(kind=TermKind.NONNEG, selection=Selection.ABUNDANCE_ROWS),
        SplitTerm(kind=TermKind.SUM_TO_ONE, selection=Selection.ABUNDANCE_ROWS),
    ]
    return SplitProblem.from_terms("linear", terms, M.data)


def assemble(Y: SpectralCube, M: EndmemberMatrix, spec: UnmixSpec) -> SplitProblem:
    """Dispatch on the spec's method."""
    if isinstance(spec.method, NusalMethod):
        return assemble_nusal(Y, M, spec)
    if isinstance(spec.method, RusalMethod):
        return assemble_rusal(Y, M, spec)
    return assemble_linear_baseline(Y, M)


def clean_abundances(
    A: np.ndarray, tol: float, converged: bool = True
) -> Tuple[np.ndarray, float]:
    """
    Map solver abundances onto the probability simplex.

    Entries in [-tol, 0) are clamped to zero and columns renormalized when the
    worst violation is within tol; otherwise every column is projected onto
    the simplex.

    Returns:
        (cleaned abundances, worst violation before cleanup)
    """
    violation = max(
        float(-A.min()) if A.size else 0.0,
        float(np.max(np.abs(A.sum(axis=0) - 1.0))),
        0.0,
    )
    if violation <= tol:
        clamped = np.where(A > 0, A, 0.0)
        return clamped / clamped.sum(axis=0, keepdims=True), violation

    log = logger.debug if converged else logger.warning
    log(f"Abundance violation {violation:.3e} exceeds {tol:.1e}, projecting onto the simplex")
    return project_simplex(A), violation


def _check_recovered(A: np.ndarray, Z: np.ndarray, report: SolverReport):
    """Fail with a numerical error when cleanup cannot yield valid abundances."""
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(A))):
        raise FloatingPointError(f"Non-finite solution after {report.iterations} iterations")
    deviation = float(np.max(np.abs(A.sum(axis=0) - 1.0))) if A.size else 0.0
    if A.size and (A.min() < -ANC_TOLERANCE or deviation > ASC_TOLERANCE):
        raise FloatingPointError(
            f"Abundances could not be mapped onto the simplex after {report.iterations} "
            f"iterations (sum deviation {deviation:.3e}, max violation "
            f"{report.max_violation:.3e})"
        )


def unmix(
    Y: SpectralCube,
    M: EndmemberMatrix,
    spec: UnmixSpec,
    config: Optional[UnmixConfig] = None,
    init: Optional[np.ndarray] = None,
) -> UnmixResult:
    """
    Unmix a cube with known endmembers.

    Args:
        Y: Observed cube
        M: Endmember matrix
        spec: Method, regularization weights and solver options
        config: Configuration object (optional, uses global config if not provided)
        init: Optional initial stacked iterate

    Returns:
        UnmixResult with reconstruction = M A + P X

    Raises:
        ValueError: On dimension mismatch or an invalid spec
        MemoryError: If the interaction dictionary exceeds the configured cap
        FloatingPointError: If the solver produces non-finite or diverging iterates
    """
    if config is None:
        config = get_config()

    problem = assemble(Y, M, spec)
    R = problem.n_endmembers
    logger.info(
        f"Unmixing {Y.n_pixels} pixels ({Y.rows}x{Y.cols}, L={Y.n_bands}) with "
        f"{spec.method.kind}, R={R}, D={problem.n_residual}, tau1={spec.tau1}, tau2={spec.tau2}"
    )
    state, report = admm.solve(problem, spec.solver, init=init)

    A, _ = clean_abundances(state.Z[:R], config.abundance_cleanup_tol, report.converged)
    _check_recovered(A, state.Z, report)
    abundances = AbundanceMatrix(data=A)

    residual_coeffs = None
    if problem.n_residual:
        X = state.Z[R:]
        kind = "NL" if isinstance(spec.method, NusalMethod) else "ME"
        if kind == "NL":
            X = np.where(X > 0, X, 0.0)
        residual_coeffs = ResidualCoefficients(data=X, kind=kind)
        residual_term = problem.residual_basis @ X
    else:
        residual_term = np.zeros_like(Y.data)

    reconstruction = SpectralCube(
        data=M.data @ abundances.data + residual_term, rows=Y.rows, cols=Y.cols
    )
    return UnmixResult(
        spec=spec,
        abundances=abundances,
        residual_coeffs=residual_coeffs,
        reconstruction=reconstruction,
        residual_term=residual_term,
        report=report,
        dictionary=problem.dictionary,
    )


def grid_search(
    Y: SpectralCube,
    M: EndmemberMatrix,
    method: Union[NusalMethod, RusalMethod],
    grid: Optional[Sequence[float]] = None,
    truth: Optional[Union[AbundanceMatrix, np.ndarray]] = None,
    workers: Optional[int] = None,
    solver: Optional[SolverOptions] = None,
    config: Optional[UnmixConfig] = None,
) -> GridSearchResult:
    """
    Pick (tau1, tau2) over the product grid.

    The selection criterion is the abundance RMSE when ground truth is supplied
    and the reconstruction error otherwise. Grid points run in a thread pool, and
    scores are reduced in grid order so ties resolve to the first point.

    Args:
        Y: Observed cube
        M: Endmember matrix
        method: NUSAL or RUSAL method
        grid: Values tried for both weights (defaults to config.tau_grid)
        truth: Optional true abundances (R x N)
        workers: Thread count (defaults to config.grid_workers)
        solver: Solver options shared by every point
        config: Configuration object (optional, uses global config if not provided)

    Returns:
        GridSearchResult with every score and the best result

    Raises:
        ValueError: For the linear baseline, an empty grid or a truth shape mismatch
    """
    if config is None:
        config = get_config()
    if isinstance(method, LinearMethod):
        raise ValueError("grid search needs a regularized method (nusal or rusal)")

    values = tuple(config.tau_grid if grid is None else grid)
    if not values:
        raise ValueError("tau grid cannot be empty")
    workers = config.grid_workers if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be >= 1")

    truth_data = None
    if truth is not None:
        truth_data = truth.data if isinstance(truth, AbundanceMatrix) else np.asarray(truth)
        if truth_data.shape != (M.n_endmembers, Y.n_pixels):
            raise ValueError(
                f"truth has shape {truth_data.shape}, expected {(M.n_endmembers, Y.n_pixels)}"
            )
    criterion = "armse" if truth_data is not None else "re"
    if solver is None:
        solver = SolverOptions.from_config(config)

    points = list(product(values, values))
    logger.info(
        f"Grid search over {len(points)} points for {method.kind} "
        f"(criterion={criterion}, workers={workers})"
    )

    def run(taus: Tuple[float, float]) -> Tuple[UnmixResult, float]:
        spec = UnmixSpec.for_method(
            method, tau1=taus[0], tau2=taus[1], solver=solver, config=config
        )
        result = unmix(Y, M, spec, config=config)
        if truth_data is not None:
            score = armse(truth_data, result.abundances.data)
        else:
            score = reconstruction_error(Y.data, result.reconstruction.data)
        return result, score

    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(run, points))

    scored = [
        GridPoint(tau1=t1, tau2=t2, score=score, converged=result.report.converged)
        for (t1, t2), (result, score) in zip(points, outcomes)
    ]
    best_index = min(range(len(scored)), key=lambda i: scored[i].score)
    best = scored[best_index]
    logger.info(
        f"Best grid point tau1={best.tau1}, tau2={best.tau2} ({criterion}={best.score:.6e})"
    )
    return GridSearchResult(criterion=criterion, points=scored, best=outcomes[best_index][0])
