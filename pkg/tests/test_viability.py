import math

import numpy as np
import pytest

from sliprl.slip import ModelParams, Outcome, apex_step
from sliprl.viability import (CellClass, GridSpec, ReferenceFit, classify,
                              compute_viability_kernel, fit_reference_policy,
                              min_feasible_s)

P = ModelParams()


class TestGridSpec:
    def test_defaults(self):
        spec = GridSpec()
        assert spec.n_s == 401 and spec.n_alpha == 301
        assert spec.s_values[0] == pytest.approx(0.01)
        assert spec.alpha_values[-1] == pytest.approx(math.radians(30.0))

    @pytest.mark.parametrize("kw", [
        dict(s_min=0.0), dict(s_min=0.9, s_max=0.5), dict(n_s=1),
        dict(n_alpha=1), dict(s_max=1.5),
    ])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            GridSpec(**kw)


class TestTransitionGrid:
    def test_infeasible_cells_match_geometry(self, coarse_grid):
        # infeasible exactly where the foot would start underground
        y = coarse_grid.s_values * P.e_total / (P.m * P.g)
        infeasible = (y[:, None]
                      <= P.l0 * np.cos(coarse_grid.alpha_values)[None, :])
        got = coarse_grid.outcome_codes == Outcome.INFEASIBLE
        assert np.array_equal(got, infeasible)

    def test_s_next_defined_iff_next_apex(self, coarse_grid):
        nx = coarse_grid.outcome_codes == Outcome.NEXT_APEX
        assert np.all(np.isfinite(coarse_grid.s_next[nx]))
        assert np.all(np.isnan(coarse_grid.s_next[~nx]))

    def test_classification_partitions(self, coarse_grid):
        cls = classify(coarse_grid)
        assert set(np.unique(cls)) <= {int(c) for c in CellClass}
        nx = coarse_grid.outcome_codes == Outcome.NEXT_APEX
        assert np.all(cls[~nx] != CellClass.HIGHER)
        assert np.all(cls[~nx] != CellClass.LOWER)

    def test_classify_rejects_bad_tolerance(self, coarse_grid):
        with pytest.raises(ValueError):
            classify(coarse_grid, tol_neutral=0.0)


class TestKernel:
    def test_lower_bound(self, coarse_kernel):
        # coarse-grid estimate of the kernel bound near 0.675
        assert coarse_kernel.s_low == pytest.approx(0.675, abs=0.02)
        assert not coarse_kernel.empty

    def test_kernel_is_upper_interval(self, coarse_kernel):
        members = np.flatnonzero(coarse_kernel.member)
        assert np.array_equal(
            members, np.arange(members[0], len(coarse_kernel.s_values)))

    def test_doom_below_bound(self, coarse_grid, coarse_kernel):
        cls = classify(coarse_grid)
        below = coarse_grid.s_values < coarse_kernel.s_low
        assert not np.any(cls[below] == CellClass.HIGHER)
        assert not np.any(cls[below] == CellClass.NEUTRAL)

    def test_fixed_point_stability(self, coarse_grid, coarse_kernel):
        again = compute_viability_kernel(coarse_grid)
        assert np.array_equal(again.member, coarse_kernel.member)


class TestNeutralCurve:
    def test_points_are_fixed_points(self, coarse_grid, integrator):
        from sliprl.viability import neutral_curve
        curve = neutral_curve(coarse_grid, integrator)
        assert len(curve) >= 10
        for s, a in curve[::5]:
            out = apex_step(s, a, P, integrator)
            assert out.is_next_apex
            assert out.s_next == pytest.approx(s, abs=1e-3)

    def test_reference_fit(self, coarse_fit):
        # stabilizing controllers slope downward in alpha vs s_bar
        assert coarse_fit.theta0 < 0
        assert coarse_fit.theta0 == pytest.approx(-1.31, abs=0.05)
        assert coarse_fit.theta1 == pytest.approx(1.45, abs=0.05)
        assert coarse_fit.rms_residual < 0.05

    def test_fit_requires_points(self):
        with pytest.raises(ValueError):
            fit_reference_policy([(0.8, 0.3)])
        with pytest.raises(ValueError):
            fit_reference_policy([(0.8, 0.3), (0.8, 0.2)])


class TestMinFeasible:
    def test_closed_form(self):
        expect = P.l0 * math.cos(math.radians(30.0)) * P.m * P.g / P.e_total
        assert min_feasible_s(P) == pytest.approx(expect, rel=1e-12)
        assert min_feasible_s(P) == pytest.approx(0.3654, abs=1e-4)
