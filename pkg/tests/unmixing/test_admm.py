"""
Tests for the ADMM engine.

Solutions of small NUSAL and RUSAL problems are checked against an
accelerated proximal-gradient reference solver.
"""

import math

import numpy as np
import pytest

from resunmix.unmixing import admm
from resunmix.unmixing.dictionaries import build_interaction_matrix
from resunmix.unmixing.models import (
    EndmemberMatrix,
    NusalMethod,
    RusalMethod,
    Selection,
    SolverOptions,
    SpectralCube,
    UnmixSpec,
)
from resunmix.unmixing.prox import project_simplex, project_sum_to_one, prox_l1, prox_l21
from resunmix.unmixing.unmixers import assemble_linear_baseline, assemble_nusal, assemble_rusal

TIGHT = SolverOptions(tol=1e-8, max_iter=20000, require_both=True)


def _reference_solution(problem, tau1, tau2, nonneg_residual, iterations=20000):
    """FISTA on the same objective: simplex abundances, sparse residual block."""
    S = problem.quadratic.operator
    Y = problem.quadratic.observations
    R = problem.n_endmembers
    step = 1.0 / np.linalg.norm(S, 2) ** 2

    Z = admm.initial_iterate(problem)
    W = Z.copy()
    t = 1.0
    for _ in range(iterations):
        V = W - step * (S.T @ (S @ W - Y))
        A = project_simplex(V[:R])
        if nonneg_residual:
            X = prox_l21(np.maximum(V[R:] - step * tau1, 0.0), step * tau2)
        else:
            X = prox_l21(prox_l1(V[R:], step * tau1), step * tau2)
        Z_next = np.vstack([A, X])
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        W = Z_next + ((t - 1.0) / t_next) * (Z_next - Z)
        Z, t = Z_next, t_next
    return Z


def _feasible(Z, R, nonneg_residual):
    X = np.maximum(Z[R:], 0.0) if nonneg_residual else Z[R:]
    return np.vstack([project_simplex(Z[:R]), X])


@pytest.fixture
def pair():
    """Two endmembers whose products are not in their span."""
    return EndmemberMatrix(
        data=np.array(
            [
                [0.9, 0.1],
                [0.7, 0.3],
                [0.6, 0.2],
                [0.55, 0.5],
                [0.3, 0.6],
                [0.2, 0.9],
                [0.25, 0.7],
                [0.1, 0.8],
            ]
        )
    )


@pytest.fixture
def nonlinear_cube(pair, rng):
    """Three pixels with bilinear interactions and mild noise."""
    A = np.array([[0.7, 0.3, 0.5], [0.3, 0.7, 0.5]])
    Q = build_interaction_matrix(pair, 2).Q
    gamma = np.array([[0.2, 0.0, 0.1], [0.0, 0.0, 0.05], [0.1, 0.0, 0.0]])
    Y = pair.data @ A + Q @ gamma + 0.001 * rng.normal(size=(8, 3))
    return SpectralCube.from_matrix(Y)


class TestAdaptPenalty:
    """Tests for residual balancing."""

    def test_primal_dominates(self):
        mu, rescale = admm.adapt_penalty(0.1, 100.0, 1.0, SolverOptions())
        assert mu == pytest.approx(0.2)
        assert rescale == 0.5

    def test_dual_dominates(self):
        mu, rescale = admm.adapt_penalty(0.1, 1.0, 100.0, SolverOptions())
        assert mu == pytest.approx(0.05)
        assert rescale == 2.0

    def test_balanced(self):
        assert admm.adapt_penalty(0.1, 5.0, 1.0, SolverOptions()) == (0.1, 1.0)

    def test_ratio_is_strict(self):
        assert admm.adapt_penalty(0.1, 10.0, 1.0, SolverOptions()) == (0.1, 1.0)


class TestRowSelection:
    """Tests for H_j and H_j^T."""

    def test_select(self):
        Z = np.arange(10.0).reshape(5, 2)
        np.testing.assert_array_equal(admm.select_rows(Selection.ABUNDANCE_ROWS, Z, 2), Z[:2])
        np.testing.assert_array_equal(admm.select_rows(Selection.RESIDUAL_ROWS, Z, 2), Z[2:])
        assert admm.select_rows(Selection.IDENTITY, Z, 2) is Z

    def test_embed_pads_with_zeros(self):
        block = np.ones((3, 2))
        out = admm.embed_rows(Selection.RESIDUAL_ROWS, block, 2, 5)
        np.testing.assert_array_equal(out[:2], 0.0)
        np.testing.assert_array_equal(out[2:], 1.0)


class TestComputeResiduals:
    """Tests for the primal and dual residual norms."""

    @pytest.fixture
    def state(self, pair, nonlinear_cube):
        problem = assemble_nusal(nonlinear_cube, pair, UnmixSpec(method=NusalMethod(order=2)))
        Z = admm.initial_iterate(problem)
        R = problem.n_endmembers
        U = [admm.select_rows(t.selection, Z, R).copy() for t in problem.terms]
        return problem, admm.SolverState(Z=Z, U=U, D=[np.zeros_like(u) for u in U], mu=0.5)

    def test_consistent_split_is_zero(self, state):
        problem, st = state
        assert admm.compute_residuals(st, problem, list(st.U)) == (0.0, 0.0)

    def test_single_perturbation(self, state, rng):
        problem, st = state
        prev = list(st.U)
        E = rng.normal(size=st.U[1].shape)
        st.U = [u + E if j == 1 else u for j, u in enumerate(st.U)]
        primal, dual = admm.compute_residuals(st, problem, prev)
        assert primal == pytest.approx(np.linalg.norm(E))
        assert dual == pytest.approx(0.5 * np.linalg.norm(E))

    def test_matches_padded_loop(self, state, rng):
        problem, st = state
        R, D, N, _ = problem.dims
        prev = list(st.U)
        st.U = [u + rng.normal(size=u.shape) for u in st.U]
        primal_sq = dual_sq = 0.0
        for term, U, U_prev in zip(problem.terms, st.U, prev):
            HZ = admm.select_rows(term.selection, st.Z, R)
            padded = admm.embed_rows(term.selection, U - U_prev, R, R + D)
            for i in range(U.shape[0]):
                for n in range(N):
                    primal_sq += (HZ[i, n] - U[i, n]) ** 2
            for i in range(R + D):
                for n in range(N):
                    dual_sq += padded[i, n] ** 2
        primal, dual = admm.compute_residuals(st, problem, prev)
        assert primal == pytest.approx(math.sqrt(primal_sq))
        assert dual == pytest.approx(0.5 * math.sqrt(dual_sq))


class TestObjective:
    """Tests for objective and max_violation."""

    def test_indicators_excluded(self, pair):
        cube = SpectralCube.from_matrix(pair.data @ np.array([[0.5], [0.5]]))
        problem = assemble_linear_baseline(cube, pair)
        Z = np.array([[1.5], [-0.5]])
        residual = cube.data - pair.data @ Z
        assert admm.objective(problem, Z) == pytest.approx(0.5 * float(np.sum(residual**2)))
        assert admm.max_violation(problem, Z) == pytest.approx(0.5)

    def test_feasible_point(self, pair):
        cube = SpectralCube.from_matrix(pair.data @ np.array([[0.5], [0.5]]))
        problem = assemble_linear_baseline(cube, pair)
        Z = np.array([[0.5], [0.5]])
        assert admm.objective(problem, Z) == pytest.approx(0.0, abs=1e-24)
        assert admm.max_violation(problem, Z) == 0.0


class TestSolve:
    """Tests for the solver loop."""

    def test_nusal_matches_reference(self, pair, nonlinear_cube):
        spec = UnmixSpec(method=NusalMethod(order=2), tau1=0.001, tau2=0.002)
        problem = assemble_nusal(nonlinear_cube, pair, spec)
        state, report = admm.solve(problem, TIGHT)

        reference = _reference_solution(problem, 0.001, 0.002, nonneg_residual=True)
        admm_obj = admm.objective(problem, _feasible(state.Z, 2, True))
        ref_obj = admm.objective(problem, reference)
        assert admm_obj == pytest.approx(ref_obj, rel=1e-4, abs=1e-7)
        assert report.max_violation < 1e-5

    def test_rusal_matches_reference(self, pair, nonlinear_cube):
        spec = UnmixSpec(method=RusalMethod(dct_dim=3), tau1=0.001, tau2=0.001)
        problem = assemble_rusal(nonlinear_cube, pair, spec)
        state, report = admm.solve(problem, TIGHT)

        reference = _reference_solution(problem, 0.001, 0.001, nonneg_residual=False)
        admm_obj = admm.objective(problem, _feasible(state.Z, 2, False))
        ref_obj = admm.objective(problem, reference)
        assert admm_obj == pytest.approx(ref_obj, rel=1e-4, abs=1e-7)
        assert report.max_violation < 1e-5

    def test_max_iter_reported_not_raised(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        state, report = admm.solve(problem, SolverOptions(max_iter=1, tol=1e-12))
        assert not report.converged
        assert report.iterations == 1
        assert state.iteration == 1

    def test_threshold_scaling(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        _, report = admm.solve(problem, SolverOptions(max_iter=1, tol=1e-3))
        assert report.threshold == pytest.approx(1e-3 * math.sqrt(2 * 3))

    def test_history_recorded(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        _, report = admm.solve(
            problem, SolverOptions(max_iter=5, tol=1e-12, record_history=True)
        )
        assert [r.iteration for r in report.history] == [1, 2, 3, 4, 5]
        assert report.history[-1].primal == report.primal_residual

    def test_no_history_by_default(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        _, report = admm.solve(problem, SolverOptions(max_iter=3))
        assert report.history == []

    def test_deterministic(self, pair, nonlinear_cube):
        spec = UnmixSpec(method=NusalMethod(order=2))
        problem = assemble_nusal(nonlinear_cube, pair, spec)
        opts = SolverOptions(max_iter=200, adapt=False)
        first, _ = admm.solve(problem, opts)
        second, _ = admm.solve(problem, opts)
        np.testing.assert_array_equal(first.Z, second.Z)

    def test_penalty_fixed_without_adaptation(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        _, report = admm.solve(problem, SolverOptions(max_iter=50, tol=1e-12, adapt=False, mu0=0.3))
        assert report.mu == 0.3

    def test_bad_init_shape(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        with pytest.raises(ValueError, match="init has shape"):
            admm.solve(problem, SolverOptions(max_iter=1), init=np.zeros((3, 3)))

    def test_warm_start_at_solution(self, pair):
        A = np.array([[0.25, 0.6], [0.75, 0.4]])
        cube = SpectralCube.from_matrix(pair.data @ A)
        problem = assemble_linear_baseline(cube, pair)
        state, report = admm.solve(problem, SolverOptions(tol=1e-6), init=A)
        assert report.converged
        np.testing.assert_allclose(state.Z, A, atol=1e-5)

    def test_non_finite_iterate(self, pair, nonlinear_cube, mocker):
        mocker.patch(
            "resunmix.unmixing.admm.project_sum_to_one",
            side_effect=lambda V: np.full_like(V, np.nan),
        )
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        with pytest.raises(FloatingPointError, match="iteration 1"):
            admm.solve(problem, SolverOptions(max_iter=10))

    def test_diverging_iterates(self, pair, nonlinear_cube, mocker):
        calls = []

        def blow_up(V):
            calls.append(V.shape)
            return project_sum_to_one(V) if len(calls) == 1 else np.full_like(V, 1e12)

        mocker.patch("resunmix.unmixing.admm.project_sum_to_one", side_effect=blow_up)
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        with pytest.raises(FloatingPointError, match="Diverging iterates at iteration 2"):
            admm.solve(problem, SolverOptions(max_iter=10))


class TestPenaltySchedule:
    """Tests for the adaptation period and the change cap."""

    def test_updates_only_on_period(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        opts = SolverOptions(
            max_iter=60, tol=1e-14, mu0=1e-6, adapt_period=10, record_history=True
        )
        _, report = admm.solve(problem, opts)
        history = report.history
        changed = [cur.iteration for prev, cur in zip(history, history[1:]) if cur.mu != prev.mu]
        assert changed
        assert all((it - 1) % 10 == 0 for it in changed)
        assert report.penalty_changes == len(changed)

    def test_frozen_after_cap(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        opts = SolverOptions(
            max_iter=200, tol=1e-14, mu0=1e-6, adapt_period=1, adapt_max_changes=3
        )
        _, report = admm.solve(problem, opts)
        assert report.penalty_changes == 3
        assert report.mu == pytest.approx(8e-6)

    def test_zero_cap_keeps_mu(self, pair, nonlinear_cube):
        problem = assemble_linear_baseline(nonlinear_cube, pair)
        opts = SolverOptions(max_iter=50, tol=1e-14, mu0=1e-6, adapt_max_changes=0)
        _, report = admm.solve(problem, opts)
        assert report.penalty_changes == 0
        assert report.mu == 1e-6
