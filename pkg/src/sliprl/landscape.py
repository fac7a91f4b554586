"""Monte-Carlo reward landscapes over policy-parameter space and the
salient-gradient-set (SGS) area measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .learning import InitStrategy, evaluate_policy
from .policy import PolicyParams
from .slip import IntegratorConfig, ModelParams
from .viability import ReferenceFit, ViabilityKernel


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("axis needs at least 2 points")
        if not self.lo < self.hi:
            raise ValueError("axis requires lo < hi")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class LandscapeSpec:
    theta0_axis: Axis
    theta1_axis: Axis
    sigma: float  # rad, fixed exploration during evaluation
    strategy: InitStrategy
    n_rollouts: int = 100
    reward_cap: float = 1.0
    max_steps: int = 500

    def __post_init__(self):
        if self.n_rollouts < 1:
            raise ValueError("n_rollouts must be >= 1")


@dataclass
class LandscapeGrid:
    spec: LandscapeSpec
    mean_steps: np.ndarray  # (n_theta0, n_theta1), uncapped

    @property
    def capped(self) -> np.ndarray:
        return np.minimum(self.mean_steps, self.spec.reward_cap)


def default_axes(fit: ReferenceFit, kernel: ViabilityKernel,
                 n: int = 61) -> tuple[Axis, Axis]:
    """Parameter axes centered on the reference fit: slope spanning +/- 3x
    the fitted slope, offset mapping the mean action across [-40, 70] deg
    at the kernel midpoint. Keeps the SGS interior to the grid."""
    half = 3.0 * abs(fit.theta0)
    t0 = Axis(fit.theta0 - half, fit.theta0 + half, n)
    s_mid = 0.5 * (kernel.s_low + 1.0)
    t1 = Axis(math.radians(-40.0) - fit.theta0 * s_mid,
              math.radians(70.0) - fit.theta0 * s_mid, n)
    return t0, t1


def _cell(theta0: float, theta1: float, spec: LandscapeSpec, p: ModelParams,
          cfg: IntegratorConfig, seed: int, i: int, j: int) -> float:
    pp = PolicyParams(theta0, theta1, spec.sigma)
    return evaluate_policy(pp, spec.strategy, spec.n_rollouts, p, cfg,
                           (seed, "landscape", i, j),
                           max_steps=spec.max_steps, action_mode="fail")


def compute_landscape(spec: LandscapeSpec, p: ModelParams,
                      cfg: IntegratorConfig, seed: int,
                      n_jobs: int = 1) -> LandscapeGrid:
    """Evaluate mean steps per parameter cell; each cell owns an RNG
    stream derived from (seed, cell index), so the grid is deterministic
    under any evaluation schedule and matched across strategies."""
    t0s = spec.theta0_axis.values
    t1s = spec.theta1_axis.values

    def row(i: int) -> np.ndarray:
        return np.array([_cell(float(t0s[i]), float(t1s[j]), spec, p, cfg,
                               seed, i, j) for j in range(len(t1s))])

    rows = Parallel(n_jobs=n_jobs)(delayed(row)(i) for i in range(len(t0s)))
    return LandscapeGrid(spec, np.stack(rows))


def sgs_area(grid: LandscapeGrid, eps: float = 0.005) -> float:
    """Fraction of parameter cells with a salient (non-zero) reward signal:
    mean steps above eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return float(np.mean(grid.mean_steps > eps))


def compare_sgs(a: LandscapeGrid, b: LandscapeGrid,
                eps: float = 0.005) -> float:
    """Relative SGS-area increase of b over a."""
    if (a.spec.theta0_axis != b.spec.theta0_axis
            or a.spec.theta1_axis != b.spec.theta1_axis):
        raise ValueError("landscapes must share parameter axes")
    base = sgs_area(a, eps)
    if base == 0.0:
        raise ZeroDivisionError("reference landscape has an empty SGS")
    return (sgs_area(b, eps) - base) / base
