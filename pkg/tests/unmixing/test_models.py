"""
Tests for Pydantic models.

Covers array coercion and immutability, abundance constraints, multi-index
metadata, split-problem structure, method specs and scene recipes.
"""

import math

import numpy as np
from pydantic import ValidationError
import pytest

from resunmix.config import UnmixConfig, set_config
from resunmix.unmixing.models import (
    AbundanceMatrix,
    EndmemberMatrix,
    LinearMethod,
    LMMClass,
    MetricsReport,
    MultiIndex,
    NLKClass,
    NusalMethod,
    ResidualCoefficients,
    RusalMethod,
    SceneSpec,
    Selection,
    SolverOptions,
    SpectralCube,
    SplitProblem,
    SplitTerm,
    TermKind,
    UnmixSpec,
)


class TestSpectralCube:
    """Tests for SpectralCube model."""

    def test_valid_cube(self):
        cube = SpectralCube(data=np.ones((4, 6)), rows=2, cols=3)
        assert cube.n_bands == 4
        assert cube.n_pixels == 6

    def test_data_is_read_only(self):
        cube = SpectralCube(data=np.ones((4, 6)), rows=2, cols=3)
        with pytest.raises(ValueError):
            cube.data[0, 0] = 2.0

    def test_source_array_not_aliased(self):
        source = np.ones((3, 2))
        cube = SpectralCube(data=source, rows=1, cols=2)
        source[0, 0] = 5.0
        assert cube.data[0, 0] == 1.0

    def test_geometry_mismatch(self):
        with pytest.raises(ValidationError, match="does not match 6 pixels"):
            SpectralCube(data=np.ones((4, 6)), rows=2, cols=2)

    def test_from_matrix_defaults_to_single_row(self):
        cube = SpectralCube.from_matrix(np.ones((3, 5)))
        assert (cube.rows, cube.cols) == (1, 5)

    def test_from_matrix_infers_cols(self):
        cube = SpectralCube.from_matrix(np.ones((3, 6)), rows=2)
        assert cube.cols == 3

    def test_to_image(self):
        cube = SpectralCube(data=np.ones((2, 6)), rows=2, cols=3)
        image = cube.to_image(np.arange(6))
        assert image.shape == (2, 3)
        assert image[1, 0] == 3

    def test_nan_rejected(self):
        data = np.ones((2, 2))
        data[0, 1] = np.nan
        with pytest.raises(ValidationError, match="non-finite"):
            SpectralCube(data=data, rows=1, cols=2)


class TestEndmemberMatrix:
    """Tests for EndmemberMatrix model."""

    def test_valid(self, tiny_endmembers):
        assert tiny_endmembers.n_bands == 8
        assert tiny_endmembers.n_endmembers == 2

    def test_negative_rejected(self):
        with pytest.raises(ValidationError, match="nonnegative"):
            EndmemberMatrix(data=[[0.1, -0.2], [0.3, 0.4]])

    def test_duplicate_columns_rejected(self):
        with pytest.raises(ValidationError, match="pairwise distinct"):
            EndmemberMatrix(data=[[0.1, 0.1], [0.3, 0.3]])

    def test_single_endmember_rejected(self):
        with pytest.raises(ValidationError, match="at least 2 columns"):
            EndmemberMatrix(data=[[0.1], [0.2]])


class TestAbundanceMatrix:
    """Tests for AbundanceMatrix constraints."""

    def test_valid(self):
        A = AbundanceMatrix(data=[[0.2, 1.0], [0.8, 0.0]])
        assert A.n_endmembers == 2
        assert A.n_pixels == 2

    def test_tiny_negative_tolerated(self):
        AbundanceMatrix(data=[[-5e-10, 0.5], [1.0 + 5e-10, 0.5]])

    def test_negative_rejected(self):
        with pytest.raises(ValidationError, match="nonnegativity"):
            AbundanceMatrix(data=[[-0.1, 0.5], [1.1, 0.5]])

    def test_sum_to_one_rejected(self):
        with pytest.raises(ValidationError, match="must sum to 1"):
            AbundanceMatrix(data=[[0.3, 0.5], [0.3, 0.5]])


class TestResidualCoefficients:
    """Tests for ResidualCoefficients."""

    def test_me_allows_negative(self):
        coeffs = ResidualCoefficients(data=[[-0.3], [0.2]], kind="ME")
        assert coeffs.data[0, 0] == -0.3

    def test_nl_must_be_nonnegative(self):
        with pytest.raises(ValidationError, match="NL coefficients"):
            ResidualCoefficients(data=[[-0.3], [0.2]], kind="NL")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            ResidualCoefficients(data=[[0.0]], kind="XX")


class TestMultiIndex:
    """Tests for MultiIndex metadata."""

    def test_order_and_label(self):
        idx = MultiIndex(k=(2, 0, 1))
        assert idx.order == 3
        assert idx.label == "m1^2*m3"
        assert not idx.is_pure_power

    def test_pure_power(self):
        idx = MultiIndex(k=(0, 2))
        assert idx.is_pure_power
        assert idx.label == "m2^2"

    def test_cross_label(self):
        assert MultiIndex(k=(1, 1, 0)).label == "m1*m2"

    def test_order_below_two_rejected(self):
        with pytest.raises(ValidationError, match="order must be >= 2"):
            MultiIndex(k=(1, 0))

    def test_negative_exponent_rejected(self):
        with pytest.raises(ValidationError, match="nonnegative"):
            MultiIndex(k=(3, -1))


class TestSplitProblem:
    """Tests for split terms and problems."""

    def _terms(self, Y, S):
        return [
            SplitTerm(
                kind=TermKind.QUADRATIC, selection=Selection.IDENTITY, observations=Y, operator=S
            ),
            SplitTerm(kind=TermKind.L1, selection=Selection.RESIDUAL_ROWS, weight=0.1),
            SplitTerm(kind=TermKind.NONNEG, selection=Selection.ABUNDANCE_ROWS),
        ]

    def test_gram_derived_from_terms(self, tiny_endmembers):
        P = np.ones((8, 1))
        S = np.hstack([tiny_endmembers.data, P])
        problem = SplitProblem.from_terms(
            "test", self._terms(np.ones((8, 3)), S), tiny_endmembers.data, residual_basis=P
        )
        np.testing.assert_array_equal(problem.gram, [2.0, 2.0, 2.0])
        assert problem.dims == (2, 1, 3, 8)
        assert problem.quadratic.kind == TermKind.QUADRATIC

    def test_wrong_gram_rejected(self, tiny_endmembers):
        terms = self._terms(np.ones((8, 3)), tiny_endmembers.data)
        with pytest.raises(ValidationError, match="gram diagonal"):
            SplitProblem(
                method="test",
                terms=terms,
                n_endmembers=2,
                n_residual=0,
                n_pixels=3,
                n_bands=8,
                gram=np.array([5.0, 5.0]),
                endmembers=tiny_endmembers.data,
            )

    def test_quadratic_needs_data(self):
        with pytest.raises(ValidationError, match="requires observations"):
            SplitTerm(kind=TermKind.QUADRATIC, selection=Selection.IDENTITY)

    def test_sum_to_one_on_abundances_only(self):
        with pytest.raises(ValidationError, match="abundance rows"):
            SplitTerm(kind=TermKind.SUM_TO_ONE, selection=Selection.IDENTITY)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            SplitTerm(kind=TermKind.L1, selection=Selection.RESIDUAL_ROWS, weight=-1.0)

    def test_block_rows(self):
        term = SplitTerm(kind=TermKind.L21, selection=Selection.RESIDUAL_ROWS)
        assert term.block_rows(3, 6) == 6
        assert SplitTerm(kind=TermKind.NONNEG, selection=Selection.IDENTITY).block_rows(3, 6) == 9


class TestSolverOptions:
    """Tests for SolverOptions."""

    def test_defaults_from_config(self):
        opts = SolverOptions.from_config(UnmixConfig())
        assert opts.mu0 == 0.05
        assert opts.max_iter == 1000
        assert opts.tol == 1e-5
        assert opts.adapt is True
        assert opts.adapt_period == 10
        assert opts.adapt_max_changes == 10
        assert opts.require_both is True

    def test_schedule_from_config(self):
        config = UnmixConfig(solver_adapt_period=5, solver_adapt_max_changes=2)
        opts = SolverOptions.from_config(config)
        assert (opts.adapt_period, opts.adapt_max_changes) == (5, 2)

    def test_overrides_skip_none(self):
        opts = SolverOptions.from_config(UnmixConfig(), mu0=None, tol=1e-6)
        assert opts.mu0 == 0.05
        assert opts.tol == 1e-6

    def test_invalid_factor(self):
        with pytest.raises(ValidationError):
            SolverOptions(adapt_factor=1.0)


class TestUnmixSpec:
    """Tests for UnmixSpec and the method union."""

    def test_method_discriminator(self):
        spec = UnmixSpec.model_validate({"method": {"kind": "rusal", "dct_dim": 10}})
        assert isinstance(spec.method, RusalMethod)
        assert spec.method.dct_dim == 10

    def test_for_method_defaults(self):
        nusal = UnmixSpec.for_method(NusalMethod(order=2))
        rusal = UnmixSpec.for_method(RusalMethod())
        linear = UnmixSpec.for_method(LinearMethod())
        assert (nusal.tau1, nusal.tau2) == (0.05, 0.05)
        assert (rusal.tau1, rusal.tau2) == (0.01, 0.01)
        assert (linear.tau1, linear.tau2) == (0.0, 0.0)
        assert rusal.method.dct_dim == 20

    def test_explicit_taus_kept(self):
        spec = UnmixSpec.for_method(NusalMethod(), tau1=0.1, tau2=0.0)
        assert (spec.tau1, spec.tau2) == (0.1, 0.0)

    def test_order_cap(self):
        with pytest.raises(ValidationError, match="exceeds the configured cap 5"):
            UnmixSpec(method=NusalMethod(order=6))

    def test_order_cap_from_config(self, monkeypatch):
        monkeypatch.setenv("UNMIX_MAX_INTERACTION_ORDER", "6")
        set_config(UnmixConfig())
        assert UnmixSpec(method=NusalMethod(order=6)).method.order == 6

    def test_order_cap_from_explicit_config(self):
        raised = UnmixConfig(max_interaction_order=6)
        spec = UnmixSpec.for_method(NusalMethod(order=6), config=raised)
        assert spec.method.order == 6

        lowered = UnmixConfig(max_interaction_order=3)
        with pytest.raises(ValidationError, match="exceeds the configured cap 3"):
            UnmixSpec.for_method(NusalMethod(order=4), config=lowered)

    def test_infinite_tau_rejected(self):
        with pytest.raises(ValidationError):
            UnmixSpec(method=LinearMethod(), tau1=math.inf)


class TestSceneSpec:
    """Tests for SceneSpec and class models."""

    def test_class_names(self):
        spec = SceneSpec(
            rows=2, cols=2, n_bands=8, n_endmembers=2, classes=[LMMClass(), NLKClass()]
        )
        assert spec.class_names == ["LMM", "NL-3"]

    def test_empty_classes_rejected(self):
        with pytest.raises(ValidationError):
            SceneSpec(rows=2, cols=2, n_bands=8, n_endmembers=2, classes=[])

    def test_seed_range(self):
        SceneSpec(rows=1, cols=1, n_bands=8, n_endmembers=2, classes=[LMMClass()], seed=2**64 - 1)
        with pytest.raises(ValidationError):
            SceneSpec(rows=1, cols=1, n_bands=8, n_endmembers=2, classes=[LMMClass()], seed=2**64)

    def test_class_from_dict(self):
        spec = SceneSpec.model_validate(
            {
                "rows": 1,
                "cols": 1,
                "n_bands": 8,
                "n_endmembers": 2,
                "classes": [{"kind": "gbm", "coeff_lo": 0.5}],
            }
        )
        assert spec.class_names == ["GBM"]

    def test_gbm_range_ordered(self):
        with pytest.raises(ValidationError, match="coeff_hi must be >= coeff_lo"):
            SceneSpec.model_validate(
                {
                    "rows": 1,
                    "cols": 1,
                    "n_bands": 8,
                    "n_endmembers": 2,
                    "classes": [{"kind": "gbm", "coeff_lo": 0.9, "coeff_hi": 0.5}],
                }
            )


class TestMetricsReport:
    """Tests for MetricsReport."""

    def test_sam_degrees(self):
        report = MetricsReport(re=0.1, sam_rad=math.pi / 2)
        assert report.sam_deg == pytest.approx(90.0)
        assert report.armse is None

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            MetricsReport(re=-0.1, sam_rad=0.0)
