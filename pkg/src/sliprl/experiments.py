"""Paired learning experiments: matched-seed trials comparing the
viable-only initialization strategy against feasible-then-viable, over a
filtered sample of random policy initializations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from joblib import Parallel, delayed

from . import rngs
from .landscape import Axis
from .learning import (FeasibleThenViable, LearnerConfig, Viable,
                       evaluate_policy, train)
from .policy import PolicyParams
from .slip import IntegratorConfig, ModelParams


@dataclass(frozen=True)
class ExperimentConfig:
    n_policy_inits: int = 50
    filter_threshold: float = 0.5   # min mean steps to accept an init
    filter_rollouts: int = 100
    n_repeats_single: int = 10
    switch_threshold: float = 3.0   # rolling-average steps for the switch
    master_seed: int = 0

    def __post_init__(self):
        if self.n_policy_inits < 1 or self.n_repeats_single < 1:
            raise ValueError("counts must be >= 1")
        if self.filter_rollouts < 1:
            raise ValueError("filter_rollouts must be >= 1")
        if self.filter_threshold < 0:
            raise ValueError("filter_threshold must be non-negative")


@dataclass(frozen=True)
class TrialRecord:
    init_index: int
    policy_init: PolicyParams
    strategy: str          # "viable" | "feasible_then_viable"
    seed: int
    success: bool
    episodes_used: int
    final_eval: float      # greedy mean steps from viable starts

    def to_row(self) -> dict:
        d = {"init_index": self.init_index}
        d.update(self.policy_init.to_json_dict())
        d.update(strategy=self.strategy, seed=self.seed,
                 success=int(self.success), episodes_used=self.episodes_used,
                 final_eval=f"{self.final_eval:.6g}")
        return d


CSV_FIELDS = ["init_index", "theta0_deg_per_s", "theta1_deg", "sigma_deg",
              "strategy", "seed", "success", "episodes_used", "final_eval"]


def records_to_csv(records: list[TrialRecord]) -> str:
    """Canonical CSV: rows ordered by (init_index, strategy)."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in sorted(records, key=lambda r: (r.init_index, r.strategy)):
        w.writerow(r.to_row())
    return buf.getvalue()


def sample_filtered_policy_inits(
        theta0_axis: Axis, theta1_axis: Axis, sigma: float,
        viable: Viable, ec: ExperimentConfig, p: ModelParams,
        cfg: IntegratorConfig, max_steps: int = 500,
        n_jobs: int = 1) -> list[PolicyParams]:
    """Rejection-sample policy initializations from the parameter box,
    keeping those whose mean step count from viable starts (out-of-range
    actions failing, as in the landscape analysis) reaches the filter
    threshold. Aborts if the acceptance rate stays under 1% across 1e4
    draws."""
    rng = rngs.substream(ec.master_seed, "policy-inits")
    accepted: list[PolicyParams] = []
    draws = 0
    batch = max(ec.n_policy_inits, 16)
    while len(accepted) < ec.n_policy_inits:
        cands = []
        for _ in range(batch):
            t0 = rng.uniform(theta0_axis.lo, theta0_axis.hi)
            t1 = rng.uniform(theta1_axis.lo, theta1_axis.hi)
            cands.append(PolicyParams(t0, t1, sigma))
        scores = Parallel(n_jobs=n_jobs)(
            delayed(evaluate_policy)(
                pp, viable, ec.filter_rollouts, p, cfg,
                (ec.master_seed, "init-filter", draws + k),
                max_steps, False, "fail")
            for k, pp in enumerate(cands))
        draws += batch
        for pp, sc in zip(cands, scores):
            if sc >= ec.filter_threshold:
                accepted.append(pp)
        if draws >= 10_000 and len(accepted) < 0.01 * draws:
            raise RuntimeError(
                f"policy-init acceptance rate {len(accepted)}/{draws} "
                "below 1%; widen the box or lower the filter threshold")
    return accepted[:ec.n_policy_inits]


def _run_trial(init_index: int, pp: PolicyParams, strategy, name: str,
               seed: int, viable: Viable, lc: LearnerConfig, ec,
               p: ModelParams, cfg: IntegratorConfig) -> TrialRecord:
    res = train(pp, strategy, lc, p, cfg, seed)
    final = evaluate_policy(
        res.final_policy, viable, ec.filter_rollouts, p, cfg,
        (ec.master_seed, "final-eval", init_index, name),
        max_steps=lc.max_steps_per_episode)
    return TrialRecord(init_index, pp, name, seed, res.success,
                       res.episodes_used, final)


def run_paired_trials(inits: list[PolicyParams], viable: Viable,
                      feasible_then_viable: FeasibleThenViable,
                      lc: LearnerConfig, ec: ExperimentConfig,
                      p: ModelParams, cfg: IntegratorConfig,
                      n_jobs: int = 1) -> list[TrialRecord]:
    """One matched-seed pair of learning trials per policy init: the two
    strategies share the trial seed, so initial-state and action draws
    are aligned stream-for-stream."""
    seeds = rngs.substream(ec.master_seed, "trial-seeds").integers(
        0, 2 ** 31 - 1, size=len(inits))
    jobs = []
    for i, pp in enumerate(inits):
        for strat, name in ((viable, "viable"),
                            (feasible_then_viable, "feasible_then_viable")):
            jobs.append(delayed(_run_trial)(
                i, pp, strat, name, int(seeds[i]), viable, lc, ec, p, cfg))
    return list(Parallel(n_jobs=n_jobs)(jobs))


def run_single_init_trials(pp: PolicyParams, viable: Viable,
                           feasible_then_viable: FeasibleThenViable,
                           lc: LearnerConfig, ec: ExperimentConfig,
                           p: ModelParams, cfg: IntegratorConfig,
                           n_jobs: int = 1) -> list[TrialRecord]:
    """Repeat the matched-seed pair n_repeats_single times from one
    policy initialization (per-repeat seeds, shared across strategies)."""
    seeds = rngs.substream(ec.master_seed, "single-seeds").integers(
        0, 2 ** 31 - 1, size=ec.n_repeats_single)
    jobs = []
    for i in range(ec.n_repeats_single):
        for strat, name in ((viable, "viable"),
                            (feasible_then_viable, "feasible_then_viable")):
            jobs.append(delayed(_run_trial)(
                i, pp, strat, name, int(seeds[i]), viable, lc, ec, p, cfg))
    return list(Parallel(n_jobs=n_jobs)(jobs))


def report(records: list[TrialRecord]) -> dict:
    """Paired success summary: per-strategy rates, the four pairing
    categories (summing to the number of pairs), and the relative
    improvement of feasible-then-viable over viable-only."""
    by_pair: dict[int, dict[str, TrialRecord]] = {}
    for r in records:
        by_pair.setdefault(r.init_index, {})[r.strategy] = r
    pairs = sorted(by_pair)
    if any(set(by_pair[i]) != {"viable", "feasible_then_viable"}
           for i in pairs):
        raise ValueError("records do not form complete strategy pairs")
    v = [by_pair[i]["viable"].success for i in pairs]
    f = [by_pair[i]["feasible_then_viable"].success for i in pairs]
    n = len(pairs)
    n_v, n_f = sum(v), sum(f)
    cats = {
        "both": sum(a and b for a, b in zip(v, f)),
        "feasible_then_viable_only": sum(b and not a for a, b in zip(v, f)),
        "viable_only": sum(a and not b for a, b in zip(v, f)),
        "neither": sum(not a and not b for a, b in zip(v, f)),
    }
    rel = None if n_v == 0 else (n_f - n_v) / n_v
    return {
        "n_pairs": n,
        "success_rate_viable": n_v / n,
        "success_rate_feasible_then_viable": n_f / n,
        "paired_categories": cats,
        "relative_improvement": rel,
    }


def report_to_json(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=True) + "\n"
