"""Brute-force transition grid over (s_bar, alpha), cell classification,
and viability-kernel extraction by fixed-point removal."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .slip import (ALPHA_MAX, IntegratorConfig, ModelParams, Outcome,
                   apex_step, check_feasible)


@dataclass(frozen=True)
class GridSpec:
    s_min: float = 0.01
    s_max: float = 1.0
    n_s: int = 401
    alpha_min: float = 0.0
    alpha_max: float = ALPHA_MAX
    n_alpha: int = 301

    def __post_init__(self):
        if not 0.0 < self.s_min < self.s_max <= 1.0:
            raise ValueError("require 0 < s_min < s_max <= 1")
        if self.n_s < 2 or self.n_alpha < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @property
    def s_values(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n_s)

    @property
    def alpha_values(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.n_alpha)


@dataclass
class TransitionGrid:
    spec: GridSpec
    params: ModelParams
    outcome_codes: np.ndarray  # (n_s, n_alpha) int8 of Outcome
    s_next: np.ndarray         # (n_s, n_alpha), NaN unless NEXT_APEX

    @property
    def s_values(self) -> np.ndarray:
        return self.spec.s_values

    @property
    def alpha_values(self) -> np.ndarray:
        return self.spec.alpha_values


class CellClass(enum.IntEnum):
    INFEASIBLE = 0
    FALL = 1
    HIGHER = 2
    LOWER = 3
    NEUTRAL = 4


@dataclass
class ViabilityKernel:
    s_values: np.ndarray
    member: np.ndarray  # bool mask over the s_bar grid rows

    @property
    def empty(self) -> bool:
        return not bool(self.member.any())

    @property
    def s_low(self) -> float:
        if self.empty:
            return math.nan
        return float(self.s_values[self.member].min())


def _grid_row(s: float, alphas: np.ndarray, p: ModelParams,
              cfg: IntegratorConfig) -> tuple[np.ndarray, np.ndarray]:
    codes = np.empty(len(alphas), dtype=np.int8)
    nxt = np.full(len(alphas), np.nan)
    for j, a in enumerate(alphas):
        try:
            r = apex_step(s, float(a), p, cfg)
        except Exception as exc:
            raise RuntimeError(
                f"transition grid cell (s_bar={s}, alpha={a}) failed") from exc
        codes[j] = int(r.outcome)
        if r.is_next_apex:
            nxt[j] = r.s_next
    return codes, nxt


def compute_transition_grid(spec: GridSpec, p: ModelParams,
                            cfg: IntegratorConfig,
                            n_jobs: int = 1) -> TransitionGrid:
    """Evaluate the return map on every grid cell (rows independent)."""
    ss = spec.s_values
    alphas = spec.alpha_values
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_grid_row)(float(s), alphas, p, cfg) for s in ss)
    codes = np.stack([r[0] for r in rows])
    nxt = np.stack([r[1] for r in rows])
    return TransitionGrid(spec, p, codes, nxt)


def classify(grid: TransitionGrid, tol_neutral: float = 1e-4) -> np.ndarray:
    """Per-cell class: infeasible / fall / higher / lower / neutral."""
    if tol_neutral <= 0:
        raise ValueError("tol_neutral must be positive")
    out = np.empty(grid.outcome_codes.shape, dtype=np.int8)
    out[grid.outcome_codes == Outcome.INFEASIBLE] = CellClass.INFEASIBLE
    out[grid.outcome_codes == Outcome.FALL] = CellClass.FALL
    nx = grid.outcome_codes == Outcome.NEXT_APEX
    delta = grid.s_next - grid.s_values[:, None]
    out[nx & (delta > tol_neutral)] = CellClass.HIGHER
    out[nx & (delta < -tol_neutral)] = CellClass.LOWER
    out[nx & (np.abs(delta) <= tol_neutral)] = CellClass.NEUTRAL
    return out


def compute_viability_kernel(grid: TransitionGrid) -> ViabilityKernel:
    """Largest set of grid rows closed under some non-falling action.

    Iteratively removes rows with no action whose successor stays inside
    the current member set; successor membership uses nearest-row lookup
    restricted to the closed hull of member heights (conservative).
    """
    ss = grid.s_values
    nx = grid.outcome_codes == Outcome.NEXT_APEX
    s_next = np.where(nx, grid.s_next, ss[0])
    idx_next = np.clip(
        np.round((s_next - ss[0]) / (ss[1] - ss[0])).astype(np.int64),
        0, len(ss) - 1)
    member = nx.any(axis=1)
    while member.any():
        mem_s = ss[member]
        lo, hi = mem_s.min(), mem_s.max()
        stays = (nx & (s_next >= lo) & (s_next <= hi) & member[idx_next])
        new_member = member & stays.any(axis=1)
        if (new_member == member).all():
            break
        member = new_member
    return ViabilityKernel(ss, member)


def neutral_curve(grid: TransitionGrid, cfg: IntegratorConfig | None = None,
                  alpha_tol: float = 1e-6) -> list[tuple[float, float]]:
    """(s_bar, alpha) limit-cycle points: where the return map keeps the
    apex height constant. Refined by bisection on the continuous map."""
    cfg = cfg or IntegratorConfig()
    p = grid.params
    kernel = compute_viability_kernel(grid)
    curve: list[tuple[float, float]] = []
    alphas = grid.alpha_values
    for i in np.flatnonzero(kernel.member):
        s = float(grid.s_values[i])
        delta = grid.s_next[i] - s

        def d(a: float) -> float:
            r = apex_step(s, a, p, cfg)
            return r.s_next - s if r.is_next_apex else math.nan

        root = None
        js = np.flatnonzero(grid.outcome_codes[i] == Outcome.NEXT_APEX)
        for j0, j1 in zip(js[:-1], js[1:]):
            if j1 != j0 + 1:
                continue
            d0, d1 = delta[j0], delta[j1]
            if d0 == 0.0:
                root = float(alphas[j0])
                break
            if d0 * d1 < 0.0:
                lo, hi = float(alphas[j0]), float(alphas[j1])
                dlo = d0
                while hi - lo > alpha_tol:
                    mid = 0.5 * (lo + hi)
                    dm = d(mid)
                    if math.isnan(dm):
                        break
                    if dm == 0.0:
                        lo = hi = mid
                    elif dm * dlo < 0.0:
                        hi = mid
                    else:
                        lo, dlo = mid, dm
                root = 0.5 * (lo + hi)
                break
        if root is None and len(js) and delta[js[-1]] == 0.0:
            root = float(alphas[js[-1]])
        if root is not None:
            curve.append((s, root))
    return curve


@dataclass(frozen=True)
class ReferenceFit:
    """Least-squares line alpha = theta0 * s_bar + theta1 through the
    neutral curve; used to center policies and parameter grids."""

    theta0: float  # rad per unit s_bar
    theta1: float  # rad
    rms_residual: float


def fit_reference_policy(curve: list[tuple[float, float]]) -> ReferenceFit:
    if len(curve) < 2:
        raise ValueError("need at least two neutral-curve points to fit")
    s = np.array([c[0] for c in curve])
    a = np.array([c[1] for c in curve])
    if np.ptp(s) == 0:
        raise ValueError("degenerate neutral curve: all points share s_bar")
    theta0, theta1 = np.polyfit(s, a, 1)
    rms = float(np.sqrt(np.mean((theta0 * s + theta1 - a) ** 2)))
    return ReferenceFit(float(theta0), float(theta1), rms)


def min_feasible_s(p: ModelParams, alpha_max: float = ALPHA_MAX) -> float:
    """Least s_bar with any feasible action: y_apex = l0 cos(alpha_max)."""
    return p.l0 * math.cos(alpha_max) * p.m * p.g / p.e_total
