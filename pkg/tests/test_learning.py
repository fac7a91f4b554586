import math

import numpy as np
import pytest

from sliprl import rngs
from sliprl.learning import (CriticParams, Feasible, FeasibleThenViable,
                             LearnerConfig, TDPolicyLearner, Traces, Viable,
                             _interval, evaluate_policy, run_episode,
                             sample_initial_state, td_update, train)
from sliprl.policy import PolicyParams
from sliprl.slip import ALPHA_MAX, IntegratorConfig, ModelParams

P = ModelParams()
CFG = IntegratorConfig()
S_LOW = 0.6783
S_FEAS = P.l0 * math.cos(math.radians(30.0)) * P.m * P.g / P.e_total
FIT = PolicyParams(-1.3115, 1.4477, math.radians(3.0))


class TestStrategies:
    def test_intervals(self):
        assert _interval(Viable(S_LOW), False) == (S_LOW, 1.0)
        assert _interval(Feasible(S_FEAS), False) == (S_FEAS, 1.0)
        ftv = FeasibleThenViable(S_FEAS, S_LOW, 3.0)
        assert _interval(ftv, False) == (S_FEAS, 1.0)
        assert _interval(ftv, True) == (S_LOW, 1.0)

    def test_sample_ranges(self):
        rng = np.random.default_rng(0)
        draws = [sample_initial_state(Viable(S_LOW), rng)
                 for _ in range(500)]
        assert all(S_LOW <= s <= 1.0 for s in draws)

    def test_unviable_fraction(self):
        # uniform over [s_feas, 1]: P(s < s_low) = (s_low-s_feas)/(1-s_feas)
        rng = np.random.default_rng(1)
        draws = np.array([sample_initial_state(Feasible(S_FEAS), rng)
                          for _ in range(20_000)])
        frac = np.mean(draws < 0.675)
        assert frac == pytest.approx(0.488, abs=0.01)

    def test_degenerate_interval(self):
        with pytest.raises(ValueError):
            sample_initial_state(Viable(1.0), np.random.default_rng(0))


class TestLearnerConfig:
    def test_schedule_lookup(self):
        lc = LearnerConfig()
        assert lc.sigma_for(0.0) == pytest.approx(math.radians(3.0))
        assert lc.sigma_for(2.5) == pytest.approx(math.radians(2.0))
        assert lc.sigma_for(3.5) == pytest.approx(math.radians(1.0))
        assert lc.sigma_for(100.0) == pytest.approx(math.radians(0.5))

    @pytest.mark.parametrize("kw", [
        dict(gamma=1.0), dict(alpha_actor=0.0), dict(action_mode="wrap"),
        dict(variance_schedule=((0.0, 0.1), (1.0, 0.2))),
        dict(variance_schedule=((1.0, 0.2), (1.0, 0.1))),
    ])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            LearnerConfig(**kw)


class TestEpisodes:
    def test_reward_accounting(self):
        rng = rngs.substream(5, "ep")
        tr = run_episode(FIT, Viable(S_LOW), P, CFG, rng)
        assert tr.steps == int(sum(tr.r))
        assert set(tr.r) <= {0.0, 1.0}
        assert len(tr.s) == len(tr.a) == len(tr.r) == len(tr.s_next)
        if tr.fell:
            assert math.isnan(tr.s_next[-1])

    def test_doomed_starts_terminate(self):
        # every start below the kernel bound must end in a fall
        checked = 0
        for k in range(50):
            rng = rngs.substream(17, k)
            tr = run_episode(FIT, Feasible(S_FEAS), P, CFG, rng,
                             max_steps=500)
            if tr.s[0] < 0.675:
                assert tr.fell and tr.steps < 500
                checked += 1
        assert checked > 5

    def test_fail_mode_out_of_range_is_terminal(self):
        pp = PolicyParams(0.0, math.radians(45.0), math.radians(0.1))
        rng = rngs.substream(3, "fail")
        tr = run_episode(pp, Viable(S_LOW), P, CFG, rng, action_mode="fail")
        assert tr.fell and tr.steps == 0 and len(tr.a) == 1
        assert tr.a[0] > ALPHA_MAX  # raw draw recorded

    def test_clamp_mode_executes_boundary(self):
        pp = PolicyParams(0.0, math.radians(45.0), math.radians(0.1))
        rng = rngs.substream(3, "clamp")
        tr = run_episode(pp, Viable(S_LOW), P, CFG, rng, action_mode="clamp")
        # the 30 deg hard stop is inside the one-step band at low heights,
        # so clamped execution can take steps where fail mode cannot
        assert all(a > ALPHA_MAX for a in tr.a)

    def test_unknown_action_mode(self):
        with pytest.raises(ValueError):
            run_episode(FIT, Viable(S_LOW), P, CFG,
                        rngs.substream(0), action_mode="reflect")

    def test_greedy_is_deterministic(self):
        runs = [run_episode(FIT, Viable(S_LOW), P, CFG, rngs.substream(8),
                            greedy=True) for _ in range(2)]
        assert runs[0].s == runs[1].s and runs[0].a == runs[1].a


class TestTDUpdate:
    def test_one_step_oracle(self):
        # lambda=0 reduces to plain one-step actor-critic; all numbers
        # computed by hand from the update equations
        lc = LearnerConfig(gamma=0.9, lam=0.0, alpha_actor=0.01,
                           alpha_critic=0.02)
        actor = PolicyParams(-1.0, 1.0, 0.1)
        critic = CriticParams(0.5, 0.25)
        s, a, r, s_next = 0.8, 0.22, 1.0, 0.7
        new_actor, new_critic, tr = td_update(
            actor, critic, Traces(), (s, a, r, s_next, False), lc)
        delta = r + 0.9 * (0.5 * 0.7 + 0.25) - (0.5 * 0.8 + 0.25)
        assert delta == pytest.approx(0.89)
        assert new_critic.w0 == pytest.approx(0.5 + 0.02 * delta * 0.8)
        assert new_critic.w1 == pytest.approx(0.25 + 0.02 * delta * 1.0)
        z = (a - (-1.0 * s + 1.0)) / 0.1  # standardized residual
        assert new_actor.theta0 == pytest.approx(-1.0 + 0.01 * delta * z * s)
        assert new_actor.theta1 == pytest.approx(1.0 + 0.01 * delta * z)
        # lambda=0: traces equal the current-step terms only
        assert tr.e_w0 == pytest.approx(s) and tr.e_w1 == pytest.approx(1.0)

    def test_terminal_ignores_next_state(self):
        lc = LearnerConfig(gamma=0.9, lam=0.0)
        critic = CriticParams(0.5, 0.25)
        _, c1, _ = td_update(PolicyParams(-1, 1, 0.1), critic, Traces(),
                             (0.8, 0.2, 0.0, math.nan, True), lc)
        delta = 0.0 - (0.5 * 0.8 + 0.25)
        assert c1.w1 == pytest.approx(0.25 + lc.alpha_critic * delta)

    def test_zero_score_at_mean_action(self):
        lc = LearnerConfig()
        actor = PolicyParams(-1.0, 1.0, 0.1)
        a = -1.0 * 0.8 + 1.0
        new_actor, _, _ = td_update(actor, CriticParams(), Traces(),
                                    (0.8, a, 1.0, 0.7, False), lc)
        assert new_actor.theta0 == actor.theta0
        assert new_actor.theta1 == actor.theta1


class TestTraining:
    def test_seed_reproducibility(self):
        lc = LearnerConfig(max_episodes=60, rolling_window=10)
        runs = [train(FIT, Viable(S_LOW), lc, P, CFG, seed=21)
                for _ in range(2)]
        assert np.array_equal(runs[0].learning_curve,
                              runs[1].learning_curve)
        assert runs[0].final_policy == runs[1].final_policy
        assert runs[0].episodes_used == len(runs[0].learning_curve)

    def test_reference_fit_learns(self):
        # near-optimal start crosses a modest bar quickly
        lc = LearnerConfig(success_threshold=2.0, rolling_window=20,
                           max_episodes=800)
        result = train(FIT, Viable(S_LOW), lc, P, CFG, seed=0)
        assert result.success
        assert result.episodes_used < 800

    def test_evaluate_policy_deterministic(self):
        vals = [evaluate_policy(FIT, Viable(S_LOW), 10, P, CFG, 77)
                for _ in range(2)]
        assert vals[0] == vals[1]
        with pytest.raises(ValueError):
            evaluate_policy(FIT, Viable(S_LOW), 0, P, CFG, 77)


class TestEstimator:
    def test_fit_predict(self):
        lc = LearnerConfig(max_episodes=30, rolling_window=10)
        est = TDPolicyLearner(theta0=FIT.theta0, theta1=FIT.theta1,
                              strategy=Viable(S_LOW), config=lc, seed=4)
        est.fit()
        preds = est.predict([0.7, 0.85, 1.0])
        assert preds.shape == (3,)
        assert np.all((preds >= 0.0) & (preds <= ALPHA_MAX))

    def test_predict_requires_fit(self):
        with pytest.raises(RuntimeError):
            TDPolicyLearner().predict([0.8])
