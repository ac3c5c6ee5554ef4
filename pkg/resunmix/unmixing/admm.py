"""
ADMM engine for sums of convex terms over a stacked iterate.

Solves min_Z sum_j g_j(H_j Z) where every H_j selects rows of Z (all rows, the
abundance rows or the residual rows), so G = sum_j H_j^T H_j is diagonal and
the linear step is a row scaling. Every adapt_period iterations the penalty mu is
adapted to keep the primal and dual residual norms balanced; after
adapt_max_changes updates mu stays fixed for the rest of the run.
"""

from dataclasses import dataclass, field
import logging
import math
import time
from typing import Callable, List, Optional, Tuple

import numpy as np

from .models import (
    IterationRecord,
    Selection,
    SolverOptions,
    SolverReport,
    SplitProblem,
    SplitTerm,
    TermKind,
)
from .prox import (
    QuadraticProx,
    prox_l1,
    prox_l21,
    project_nonneg,
    project_sum_to_one,
)

logger = logging.getLogger(__name__)

_LOG_EVERY = 50

# Residual growth over the first iteration that counts as divergence
_DIVERGENCE_FACTOR = 1e8


@dataclass
class SolverState:
    """
    Iterates of one ADMM run.

    Attributes:
        Z: (R+D) x N stacked iterate
        U: Split variables U_j = prox_j(H_j Z - D_j)
        D: Scaled Lagrange multipliers
        mu: Current penalty
        penalty_changes: Number of mu updates so far
        iteration: Iterations performed
        primal_res: Last primal residual norm
        dual_res: Last dual residual norm
        history: Per-iteration records when requested
    """

    Z: np.ndarray
    U: List[np.ndarray]
    D: List[np.ndarray]
    mu: float
    penalty_changes: int = 0
    iteration: int = 0
    primal_res: float = math.inf
    dual_res: float = math.inf
    history: List[IterationRecord] = field(default_factory=list)


def select_rows(selection: Selection, Z: np.ndarray, n_endmembers: int) -> np.ndarray:
    """H_j Z."""
    if selection == Selection.IDENTITY:
        return Z
    if selection == Selection.ABUNDANCE_ROWS:
        return Z[:n_endmembers]
    return Z[n_endmembers:]


def embed_rows(
    selection: Selection, block: np.ndarray, n_endmembers: int, n_rows: int
) -> np.ndarray:
    """H_j^T block, zero-padded to the full iterate."""
    if selection == Selection.IDENTITY:
        return block
    out = np.zeros((n_rows, block.shape[1]))
    if selection == Selection.ABUNDANCE_ROWS:
        out[:n_endmembers] = block
    else:
        out[n_endmembers:] = block
    return out


def _make_prox(term: SplitTerm) -> Callable[[np.ndarray, float], np.ndarray]:
    if term.kind == TermKind.QUADRATIC:
        return QuadraticProx(term.operator, term.observations)
    if term.kind == TermKind.L1:
        return lambda V, mu: prox_l1(V, term.weight / mu)
    if term.kind == TermKind.L21:
        return lambda V, mu: prox_l21(V, term.weight / mu)
    if term.kind == TermKind.NONNEG:
        return lambda V, mu: project_nonneg(V)
    return lambda V, mu: project_sum_to_one(V)


def initial_iterate(problem: SplitProblem) -> np.ndarray:
    """Uniform abundances 1/R and zero residual coefficients."""
    R, D, N, _ = problem.dims
    Z0 = np.zeros((R + D, N))
    Z0[:R] = 1.0 / R
    return Z0


def objective(problem: SplitProblem, Z: np.ndarray) -> float:
    """
    Finite part of the regularized cost at Z.

    Sums 0.5 ||Y - [M,P] Z||_F^2 and the weighted l1 / l21 norms of the selected
    rows; the indicator terms are reported by max_violation instead.
    """
    R = problem.n_endmembers
    value = 0.0
    for term in problem.terms:
        block = select_rows(term.selection, Z, R)
        if term.kind == TermKind.QUADRATIC:
            value += 0.5 * float(np.sum((term.observations - term.operator @ block) ** 2))
        elif term.kind == TermKind.L1:
            value += term.weight * float(np.sum(np.abs(block)))
        elif term.kind == TermKind.L21:
            value += term.weight * float(np.sum(np.linalg.norm(block, axis=0)))
    return value


def max_violation(problem: SplitProblem, Z: np.ndarray) -> float:
    """Largest violation of the indicator terms at Z (0 when feasible)."""
    R = problem.n_endmembers
    worst = 0.0
    for term in problem.terms:
        block = select_rows(term.selection, Z, R)
        if term.kind == TermKind.NONNEG and block.size:
            worst = max(worst, float(-block.min()))
        elif term.kind == TermKind.SUM_TO_ONE:
            worst = max(worst, float(np.max(np.abs(block.sum(axis=0) - 1.0))))
    return worst


def compute_residuals(
    state: SolverState, problem: SplitProblem, prev_U: List[np.ndarray]
) -> Tuple[float, float]:
    """
    Primal and dual residual norms.

    primal = sqrt(sum_j ||H_j Z - U_j||_F^2)
    dual = mu * sqrt(sum_j ||H_j^T (U_j - U_j_prev)||_F^2)
    """
    R = problem.n_endmembers
    primal_sq = 0.0
    dual_sq = 0.0
    for term, U, U_prev in zip(problem.terms, state.U, prev_U):
        primal_sq += float(np.sum((select_rows(term.selection, state.Z, R) - U) ** 2))
        # H_j^T only zero-pads, so the norm of the padded block is the block norm
        dual_sq += float(np.sum((U - U_prev) ** 2))
    return math.sqrt(primal_sq), state.mu * math.sqrt(dual_sq)


def adapt_penalty(
    mu: float, primal: float, dual: float, opts: SolverOptions
) -> Tuple[float, float]:
    """
    Residual-balancing penalty update.

    Returns:
        (new mu, factor applied to every scaled multiplier D_j)
    """
    if primal > opts.adapt_ratio * dual:
        return mu * opts.adapt_factor, 1.0 / opts.adapt_factor
    if dual > opts.adapt_ratio * primal:
        return mu / opts.adapt_factor, opts.adapt_factor
    return mu, 1.0


def _stopping_threshold(problem: SplitProblem, opts: SolverOptions) -> float:
    R, D, N, _ = problem.dims
    return opts.tol * math.sqrt((R + D) * N)


def _check_finite(arrays: List[np.ndarray], iteration: int, what: str):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"Non-finite {what} at iteration {iteration}")


def _check_bounded(primal: float, dual: float, bound: float, iteration: int):
    if max(primal, dual) > bound:
        raise FloatingPointError(
            f"Diverging iterates at iteration {iteration} "
            f"(primal={primal:.3e}, dual={dual:.3e}, bound={bound:.3e})"
        )


def solve(
    problem: SplitProblem,
    opts: Optional[SolverOptions] = None,
    init: Optional[np.ndarray] = None,
) -> Tuple[SolverState, SolverReport]:
    """
    Run the ADMM variant with diagonal G.

    Each iteration computes xi_j = U_j + D_j, Z = G^-1 sum_j H_j^T xi_j,
    V_j = H_j Z - D_j, U_j = prox_j(V_j; mu) and D_j = U_j - V_j, then checks the
    stopping rule and adapts mu.

    Args:
        problem: Split problem with a strictly positive diagonal G
        opts: Solver options (optional, built from config if not provided)
        init: Optional initial Z; defaults to uniform abundances and zero residuals

    Returns:
        Final state and report. Hitting max_iter is flagged in the report, not raised.

    Raises:
        FloatingPointError: If the problem data or any iterate is non-finite, or
            the residual norms grow past _DIVERGENCE_FACTOR times their first value
    """
    if opts is None:
        opts = SolverOptions.from_config()

    R, D, N, L = problem.dims
    n_rows = R + D
    Z0 = initial_iterate(problem) if init is None else np.array(init, dtype=np.float64)
    if Z0.shape != (n_rows, N):
        raise ValueError(f"init has shape {Z0.shape}, expected {(n_rows, N)}")
    _check_finite([Z0], 0, "initial iterate")

    proxes = [_make_prox(term) for term in problem.terms]
    state = SolverState(
        Z=Z0,
        U=[select_rows(term.selection, Z0, R).copy() for term in problem.terms],
        D=[np.zeros((term.block_rows(R, D), N)) for term in problem.terms],
        mu=opts.mu0,
    )
    threshold = _stopping_threshold(problem, opts)
    inv_gram = (1.0 / problem.gram)[:, None]

    logger.info(
        f"ADMM solve: method={problem.method}, R={R}, D={D}, N={N}, L={L}, "
        f"J={len(problem.terms)}, mu0={opts.mu0}, tol={opts.tol}"
    )
    start = time.perf_counter()
    converged = False
    bound = math.inf

    for k in range(1, opts.max_iter + 1):
        accum = np.zeros((n_rows, N))
        for term, U, Dj in zip(problem.terms, state.U, state.D):
            accum += embed_rows(term.selection, U + Dj, R, n_rows)
        state.Z = accum * inv_gram

        prev_U = state.U
        new_U: List[np.ndarray] = []
        new_D: List[np.ndarray] = []
        for term, prox, Dj in zip(problem.terms, proxes, state.D):
            V = select_rows(term.selection, state.Z, R) - Dj
            U = prox(V, state.mu)
            new_U.append(U)
            new_D.append(U - V)
        state.U, state.D = new_U, new_D
        state.iteration = k
        _check_finite([state.Z] + new_U, k, "iterate")

        state.primal_res, state.dual_res = compute_residuals(state, problem, prev_U)
        if k == 1:
            bound = _DIVERGENCE_FACTOR * max(1.0, state.primal_res, state.dual_res)
        _check_bounded(state.primal_res, state.dual_res, bound, k)
        if opts.record_history:
            state.history.append(
                IterationRecord(
                    iteration=k,
                    primal=state.primal_res,
                    dual=state.dual_res,
                    mu=state.mu,
                    objective=objective(problem, state.Z),
                )
            )
        if k % _LOG_EVERY == 0:
            logger.debug(
                f"iter {k}: primal={state.primal_res:.3e}, dual={state.dual_res:.3e}, "
                f"mu={state.mu:.3e}"
            )

        primal_ok = state.primal_res < threshold
        dual_ok = state.dual_res < threshold
        if (primal_ok and dual_ok) if opts.require_both else (primal_ok or dual_ok):
            converged = True
            break

        if (
            opts.adapt
            and k % opts.adapt_period == 0
            and state.penalty_changes < opts.adapt_max_changes
        ):
            mu, rescale = adapt_penalty(state.mu, state.primal_res, state.dual_res, opts)
            if rescale != 1.0:
                logger.debug(f"iter {k}: mu {state.mu:.3e} -> {mu:.3e}")
                state.mu = mu
                state.D = [Dj * rescale for Dj in state.D]
                state.penalty_changes += 1
                if state.penalty_changes == opts.adapt_max_changes:
                    logger.debug(f"iter {k}: mu frozen at {mu:.3e}")

    runtime = time.perf_counter() - start
    report = SolverReport(
        converged=converged,
        iterations=state.iteration,
        primal_residual=state.primal_res,
        dual_residual=state.dual_res,
        threshold=threshold,
        objective=objective(problem, state.Z),
        max_violation=max_violation(problem, state.Z),
        mu=state.mu,
        penalty_changes=state.penalty_changes,
        runtime_s=runtime,
        history=list(state.history),
    )
    if converged:
        logger.info(
            f"ADMM converged in {state.iteration} iterations ({runtime:.2f}s), "
            f"objective={report.objective:.6e}"
        )
    else:
        logger.warning(
            f"ADMM reached max_iter={opts.max_iter} without converging "
            f"(primal={state.primal_res:.3e}, dual={state.dual_res:.3e}, threshold={threshold:.3e})"
        )
    return state, report
