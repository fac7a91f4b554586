"""Episodic actor-critic TD(lambda) learner on the apex return map,
with the viable / feasible state-initialization strategies under study."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator

from . import rngs
from .policy import (PolicyParams, action_in_range, mean_action,
                     sample_action, score)
from .slip import (ALPHA_MAX, IntegratorConfig, ModelParams, Outcome,
                   apex_step)
from .viability import ViabilityKernel, min_feasible_s


# ---------------------------------------------------------------------------
# initialization strategies

@dataclass(frozen=True)
class Viable:
    """Uniform initial states over the viability kernel [s_low, 1]."""

    s_low: float

    @classmethod
    def from_kernel(cls, kernel: ViabilityKernel) -> "Viable":
        if kernel.empty:
            raise ValueError("cannot sample from an empty viability kernel")
        return cls(kernel.s_low)


@dataclass(frozen=True)
class Feasible:
    """Uniform initial states over all feasible heights [s_feas_min, 1],
    including states that are doomed to fail."""

    s_feas_min: float

    @classmethod
    def from_params(cls, p: ModelParams) -> "Feasible":
        return cls(min_feasible_s(p))


@dataclass(frozen=True)
class FeasibleThenViable:
    """Feasible initializations until the rolling average performance
    exceeds switch_threshold steps, then viable only (one-way switch)."""

    s_feas_min: float
    s_low: float
    switch_threshold: float = 3.0


InitStrategy = Viable | Feasible | FeasibleThenViable


def _interval(strategy: InitStrategy, switched: bool) -> tuple[float, float]:
    if isinstance(strategy, Viable):
        return strategy.s_low, 1.0
    if isinstance(strategy, Feasible):
        return strategy.s_feas_min, 1.0
    if isinstance(strategy, FeasibleThenViable):
        return (strategy.s_low, 1.0) if switched else (strategy.s_feas_min, 1.0)
    raise TypeError(f"unknown strategy {strategy!r}")


def sample_initial_state(strategy: InitStrategy, rng: np.random.Generator,
                         switched: bool = False) -> float:
    lo, hi = _interval(strategy, switched)
    if not (math.isfinite(lo) and lo < hi):
        raise ValueError(f"degenerate initialization interval [{lo}, {hi}]")
    return lo + rng.uniform() * (hi - lo)


# ---------------------------------------------------------------------------
# learner configuration

def _default_schedule() -> tuple[tuple[float, float], ...]:
    # exploration std-dev in degrees, ratcheted down as the rolling
    # average step count crosses each threshold; the values are sized
    # against the ~4 deg width of the non-falling action band, so each
    # rung's threshold is attainable at the preceding rung's sigma
    return tuple((thr, math.radians(sig))
                 for thr, sig in [(0.0, 3.0), (2.0, 2.0),
                                  (3.0, 1.0), (4.0, 0.5)])


@dataclass(frozen=True)
class LearnerConfig:
    gamma: float = 0.95
    alpha_actor: float = 0.001
    alpha_critic: float = 0.001
    lam: float = 0.9  # eligibility-trace decay
    # (rolling-average steps threshold, sigma in rad), ratcheted downward
    variance_schedule: tuple[tuple[float, float], ...] = field(
        default_factory=_default_schedule)
    success_threshold: float = 15.0
    rolling_window: int = 50
    max_episodes: int = 20000
    max_steps_per_episode: int = 500
    action_mode: str = "clamp"  # boundary semantics during training

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.alpha_actor <= 0 or self.alpha_critic <= 0:
            raise ValueError("step sizes must be positive")
        if self.action_mode not in ("clamp", "fail"):
            raise ValueError(f"unknown action_mode {self.action_mode!r}")
        thrs = [t for t, _ in self.variance_schedule]
        sigs = [s for _, s in self.variance_schedule]
        if any(b <= a for a, b in zip(thrs, thrs[1:])):
            raise ValueError("schedule thresholds must be strictly increasing")
        if any(b >= a for a, b in zip(sigs, sigs[1:])):
            raise ValueError("schedule sigmas must be strictly decreasing")

    def sigma_for(self, rolling_avg: float) -> float:
        sigma = self.variance_schedule[0][1]
        for thr, sig in self.variance_schedule:
            if rolling_avg >= thr:
                sigma = sig
        return sigma


@dataclass(frozen=True)
class CriticParams:
    """Linear value function V(s) = w0 * s_bar + w1."""

    w0: float = 0.0
    w1: float = 0.0

    def value(self, s_bar: float) -> float:
        return self.w0 * s_bar + self.w1


@dataclass(frozen=True)
class Traces:
    e_w0: float = 0.0
    e_w1: float = 0.0
    e_t0: float = 0.0
    e_t1: float = 0.0


@dataclass
class EpisodeTrace:
    s: list[float]
    a: list[float]
    r: list[float]
    s_next: list[float]  # NaN on the terminal (fall) transition
    fell: bool

    @property
    def steps(self) -> int:
        return int(sum(self.r))


@dataclass
class TrainResult:
    success: bool
    episodes_used: int
    final_policy: PolicyParams
    learning_curve: np.ndarray  # per-episode step counts
    seed: int


# ---------------------------------------------------------------------------
# core operations

def run_episode(pp: PolicyParams, strategy: InitStrategy, p: ModelParams,
                cfg: IntegratorConfig, rng: np.random.Generator, *,
                rng_action: np.random.Generator | None = None,
                max_steps: int = 500, switched: bool = False,
                greedy: bool = False,
                action_mode: str = "clamp") -> EpisodeTrace:
    """Roll out one episode: fixed +1 reward per apex reached, terminated
    by a fall, an infeasible state-action pair, or the step cap.

    action_mode picks the boundary semantics for sampled actions outside
    the mechanical range [0, ALPHA_MAX]: "clamp" executes the nearest
    hard stop (the recorded action stays the raw draw, keeping the
    likelihood-ratio score unbiased), "fail" terminates the episode
    immediately. Learning uses "clamp"; the landscape analysis uses
    "fail" to measure the informative region of in-range actions."""
    if action_mode not in ("clamp", "fail"):
        raise ValueError(f"unknown action_mode {action_mode!r}")
    rng_action = rng_action if rng_action is not None else rng
    s = sample_initial_state(strategy, rng, switched)
    trace = EpisodeTrace([], [], [], [], fell=False)
    for _ in range(max_steps):
        if greedy:
            a = mean_action(pp, s)
        else:
            a = sample_action(pp, s, rng_action)
        trace.s.append(s)
        trace.a.append(a)
        if not action_in_range(a):
            if action_mode == "fail":
                trace.r.append(0.0)
                trace.s_next.append(math.nan)
                trace.fell = True
                break
            a = min(max(a, 0.0), ALPHA_MAX)
        out = apex_step(s, a, p, cfg)
        if out.is_next_apex:
            trace.r.append(1.0)
            trace.s_next.append(out.s_next)
            s = out.s_next
        else:
            trace.r.append(0.0)
            trace.s_next.append(math.nan)
            trace.fell = True
            break
    return trace


def td_update(actor: PolicyParams, critic: CriticParams, traces: Traces,
              transition: tuple[float, float, float, float, bool],
              lc: LearnerConfig) -> tuple[PolicyParams, CriticParams, Traces]:
    """One TD(lambda) actor-critic update for (s, a, r, s_next, terminal)."""
    s, a, r, s_next, terminal = transition
    v = critic.value(s)
    delta = r - v if terminal else r + lc.gamma * critic.value(s_next) - v
    g = lc.gamma * lc.lam
    e_w0 = g * traces.e_w0 + s
    e_w1 = g * traces.e_w1 + 1.0
    # actor traces use the sigma-standardized score, so the update size
    # does not grow as the variance schedule shrinks the exploration
    sc0, sc1 = score(actor, s, a)
    e_t0 = g * traces.e_t0 + sc0 * actor.sigma
    e_t1 = g * traces.e_t1 + sc1 * actor.sigma
    new_critic = CriticParams(critic.w0 + lc.alpha_critic * delta * e_w0,
                              critic.w1 + lc.alpha_critic * delta * e_w1)
    new_actor = replace(actor,
                        theta0=actor.theta0 + lc.alpha_actor * delta * e_t0,
                        theta1=actor.theta1 + lc.alpha_actor * delta * e_t1)
    for val in (new_critic.w0, new_critic.w1,
                new_actor.theta0, new_actor.theta1):
        if not math.isfinite(val):
            raise FloatingPointError("non-finite learner update")
    return new_actor, new_critic, Traces(e_w0, e_w1, e_t0, e_t1)


def _rolling_mean(curve: list[int], window: int) -> float:
    tail = curve[-window:]
    return float(np.mean(tail)) if tail else 0.0


def _viability_cutoff(strategy: InitStrategy) -> float | None:
    """Least viable initial height, when the strategy knows it."""
    if isinstance(strategy, Viable):
        return strategy.s_low
    if isinstance(strategy, FeasibleThenViable):
        return strategy.s_low
    return None


def evaluate_greedy(pp: PolicyParams, strategy: InitStrategy,
                    n_rollouts: int, p: ModelParams, cfg: IntegratorConfig,
                    seed, max_steps: int = 500,
                    switched: bool = False) -> float:
    """Mean step count of the deterministic mean-action policy."""
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    keys = seed if isinstance(seed, tuple) else (seed,)
    total = 0
    for r in range(n_rollouts):
        rng = rngs.substream(*keys, r)
        total += run_episode(pp, strategy, p, cfg, rng, max_steps=max_steps,
                             switched=switched, greedy=True).steps
    return total / n_rollouts


def train(initial_pp: PolicyParams, strategy: InitStrategy,
          lc: LearnerConfig, p: ModelParams, cfg: IntegratorConfig,
          seed: int) -> TrainResult:
    """Full learning trial.

    Separate named RNG streams for state initialization and action
    sampling are derived from the trial seed, so matched-seed trials with
    different strategies see aligned randomness. The rolling average that
    drives the variance schedule, the strategy switch and the success
    check is computed over viable-start episodes only, so the thresholds
    mean the same thing under every initialization strategy; decisions
    wait for a full rolling window.
    """
    rng_init = rngs.substream(seed, "init")
    rng_action = rngs.substream(seed, "action")
    actor = initial_pp
    critic = CriticParams()
    curve: list[int] = []
    perf_curve: list[int] = []
    cutoff = _viability_cutoff(strategy)
    switched = False
    success = False
    sigma = lc.sigma_for(0.0)
    for _ in range(lc.max_episodes):
        actor = replace(actor, sigma=sigma)
        trace = run_episode(actor, strategy, p, cfg, rng_init,
                            rng_action=rng_action,
                            max_steps=lc.max_steps_per_episode,
                            switched=switched, action_mode=lc.action_mode)
        traces = Traces()
        n = len(trace.s)
        for i in range(n):
            terminal = trace.fell and i == n - 1
            transition = (trace.s[i], trace.a[i], trace.r[i],
                          trace.s_next[i], terminal)
            actor, critic, traces = td_update(actor, critic, traces,
                                              transition, lc)
        curve.append(trace.steps)
        if cutoff is None or (trace.s and trace.s[0] >= cutoff):
            perf_curve.append(trace.steps)
        if len(perf_curve) < lc.rolling_window:
            continue
        avg = _rolling_mean(perf_curve, lc.rolling_window)
        # sigma only ever ratchets down: set by the highest schedule
        # threshold the rolling average has crossed so far
        sigma = min(sigma, lc.sigma_for(avg))
        if (isinstance(strategy, FeasibleThenViable) and not switched
                and avg > strategy.switch_threshold):
            switched = True
        if avg >= lc.success_threshold:
            success = True
            break
    return TrainResult(success=success, episodes_used=len(curve),
                       final_policy=replace(actor, sigma=sigma),
                       learning_curve=np.asarray(curve), seed=seed)


def evaluate_policy(pp: PolicyParams, strategy: InitStrategy,
                    n_rollouts: int, p: ModelParams, cfg: IntegratorConfig,
                    seed, max_steps: int = 500, switched: bool = False,
                    action_mode: str = "clamp") -> float:
    """Mean episode step count over n_rollouts.

    seed may be an int or a tuple of stream keys; each rollout gets its
    own derived substream, so the result is independent of evaluation
    order and matched across strategies at equal seeds.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    keys = seed if isinstance(seed, tuple) else (seed,)
    total = 0
    for r in range(n_rollouts):
        rng = rngs.substream(*keys, r)
        total += run_episode(pp, strategy, p, cfg, rng, max_steps=max_steps,
                             switched=switched,
                             action_mode=action_mode).steps
    return total / n_rollouts


# ---------------------------------------------------------------------------
# sklearn-style front end

class TDPolicyLearner(BaseEstimator):
    """Estimator wrapper around ``train``: fit() runs a learning trial on
    the hopper itself (no external data), predict() returns the greedy
    clamped action for an array of normalized apex heights."""

    def __init__(self, theta0=0.0, theta1=0.0, strategy=None,
                 config=None, model=None, integrator=None, seed=0):
        self.theta0 = theta0
        self.theta1 = theta1
        self.strategy = strategy
        self.config = config
        self.model = model
        self.integrator = integrator
        self.seed = seed

    def fit(self, X=None, y=None):
        lc = self.config if self.config is not None else LearnerConfig()
        p = self.model if self.model is not None else ModelParams()
        cfg = (self.integrator if self.integrator is not None
               else IntegratorConfig())
        strategy = self.strategy
        if strategy is None:
            strategy = Feasible.from_params(p)
        pp = PolicyParams(self.theta0, self.theta1, lc.sigma_for(0.0))
        self.result_ = train(pp, strategy, lc, p, cfg, self.seed)
        self.policy_ = self.result_.final_policy
        return self

    def predict(self, S):
        if not hasattr(self, "policy_"):
            raise RuntimeError("call fit() before predict()")
        S = np.asarray(S, dtype=float)
        mu = self.policy_.theta0 * S + self.policy_.theta1
        return np.clip(mu, 0.0, ALPHA_MAX)
