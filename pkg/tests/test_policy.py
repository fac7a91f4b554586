import math

import numpy as np
import pytest

from sliprl.policy import (PolicyParams, action_in_range, log_density,
                           mean_action, sample_action, score,
                           sigma_from_variance_deg2)
from sliprl.slip import ALPHA_MAX


class TestPolicyParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            PolicyParams(math.nan, 0.0, 0.1)
        with pytest.raises(ValueError):
            PolicyParams(0.0, 0.0, 0.0)

    def test_json_round_trip(self):
        pp = PolicyParams(-1.31, 1.45, math.radians(3.0))
        back = PolicyParams.from_json_dict(pp.to_json_dict())
        assert back.theta0 == pytest.approx(pp.theta0, rel=1e-12)
        assert back.theta1 == pytest.approx(pp.theta1, rel=1e-12)
        assert back.sigma == pytest.approx(pp.sigma, rel=1e-12)


class TestSampling:
    def test_mean_action_linear(self):
        pp = PolicyParams(-1.0, 1.2, 0.05)
        assert mean_action(pp, 0.8) == pytest.approx(0.4)

    def test_sampling_is_unclamped(self):
        # draws outside the mechanical range are returned as-is; the
        # episode loop owns the boundary semantics
        pp = PolicyParams(0.0, ALPHA_MAX, 0.5)
        rng = np.random.default_rng(0)
        draws = np.array([sample_action(pp, 0.9, rng) for _ in range(200)])
        assert np.any(draws > ALPHA_MAX)
        assert np.any(~np.isnan(draws))

    def test_seeded_determinism(self):
        pp = PolicyParams(-1.0, 1.2, 0.05)
        a = [sample_action(pp, 0.8, np.random.default_rng(3))
             for _ in range(2)]
        assert a[0] == a[1]

    def test_empirical_mean(self):
        pp = PolicyParams(0.0, math.radians(15.0), math.radians(5.0))
        rng = np.random.default_rng(1)
        draws = rng.normal(mean_action(pp, 0.5), pp.sigma, size=100_000)
        assert math.degrees(np.mean(draws)) == pytest.approx(15.0, abs=0.1)

    def test_action_in_range(self):
        assert action_in_range(0.0)
        assert action_in_range(ALPHA_MAX)
        assert not action_in_range(-1e-9)
        assert not action_in_range(ALPHA_MAX + 1e-9)


class TestScore:
    def test_zero_at_mean(self):
        pp = PolicyParams(-1.0, 1.2, 0.05)
        assert score(pp, 0.8, mean_action(pp, 0.8)) == (0.0, 0.0)

    def test_hand_value(self):
        pp = PolicyParams(0.0, 0.0, 1.0)
        d0, d1 = score(pp, 0.5, 0.2)
        assert d0 == pytest.approx(0.1)
        assert d1 == pytest.approx(0.2)

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(42)
        h = 1e-6
        for _ in range(1000):
            pp = PolicyParams(rng.uniform(-3, 1), rng.uniform(-1, 2),
                              rng.uniform(0.01, 0.3))
            s = rng.uniform(0.3, 1.0)
            a = rng.normal(mean_action(pp, s), pp.sigma)
            d0, d1 = score(pp, s, a)
            fd0 = (log_density(PolicyParams(pp.theta0 + h, pp.theta1,
                                            pp.sigma), s, a)
                   - log_density(PolicyParams(pp.theta0 - h, pp.theta1,
                                              pp.sigma), s, a)) / (2 * h)
            fd1 = (log_density(PolicyParams(pp.theta0, pp.theta1 + h,
                                            pp.sigma), s, a)
                   - log_density(PolicyParams(pp.theta0, pp.theta1 - h,
                                              pp.sigma), s, a)) / (2 * h)
            scale = max(1.0, abs(d0), abs(d1))
            assert abs(d0 - fd0) / scale < 1e-5
            assert abs(d1 - fd1) / scale < 1e-5

    def test_expectation_is_zero(self):
        pp = PolicyParams(-1.0, 1.2, math.radians(5.0))
        rng = np.random.default_rng(9)
        n = 100_000
        draws = rng.normal(mean_action(pp, 0.8), pp.sigma, size=n)
        scores = np.array([score(pp, 0.8, a) for a in draws])
        se = np.std(scores, axis=0) / math.sqrt(n)
        assert np.all(np.abs(np.mean(scores, axis=0)) < 3 * se)


class TestVarianceHelper:
    def test_conversion(self):
        assert sigma_from_variance_deg2(8.0) == pytest.approx(
            math.radians(math.sqrt(8.0)), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            sigma_from_variance_deg2(0.0)
