"""Spring-loaded inverted pendulum hopper: hybrid dynamics and the
one-dimensional apex-to-apex return map.

The state between hops is reduced to the normalized apex height
``s_bar = E_pot / (E_pot + E_kin) in (0, 1]`` using conservation of the
total mechanical energy; the single control input is the landing angle
of attack ``alpha in [0, ALPHA_MAX]`` (radians, measured from vertical,
foot placed ahead of the body).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _stance

ALPHA_MAX = math.radians(30.0)


class IntegrationError(RuntimeError):
    """Raised when an event cannot be localized or energy drifts; distinct
    from a physical fall."""


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and the conserved total mechanical energy."""

    m: float = 80.0       # body mass, kg
    k: float = 8200.0     # spring stiffness, N/m
    l0: float = 1.0       # leg rest length, m
    g: float = 9.81       # gravity, m/s^2
    e_total: float = 1860.0  # total mechanical energy, J

    def __post_init__(self):
        for name in ("m", "k", "l0", "g", "e_total"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.e_total <= self.m * self.g * self.l0 * math.cos(ALPHA_MAX):
            raise ValueError("e_total too small: no feasible apex state exists")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    event_tol: float = 1e-10   # m, residual tolerance at events
    max_step: float = 1e-2     # s

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "event_tol", "max_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


class Phase(enum.Enum):
    FLIGHT = "flight"
    STANCE = "stance"


@dataclass(frozen=True)
class FullState:
    x: float
    y: float
    vx: float
    vy: float
    phase: Phase
    x_f: float = math.nan  # foot contact point, meaningful in stance only


class Outcome(enum.IntEnum):
    NEXT_APEX = 0
    FALL = 1
    INFEASIBLE = 2


@dataclass(frozen=True)
class StepOutcome:
    """Result of one return-map step: the next apex, a fall, or an
    infeasible start (foot would begin underground)."""

    outcome: Outcome
    s_next: float = math.nan

    @property
    def is_next_apex(self) -> bool:
        return self.outcome == Outcome.NEXT_APEX


FALL = StepOutcome(Outcome.FALL)
INFEASIBLE = StepOutcome(Outcome.INFEASIBLE)


def apex_from_full(y: float, vx: float, p: ModelParams) -> float:
    """Normalized apex height from apex height and forward speed."""
    if y <= 0:
        raise ValueError("apex height must be positive")
    e = p.m * p.g * y + 0.5 * p.m * vx * vx
    if abs(e - p.e_total) / p.e_total > 1e-6:
        raise ValueError(
            f"apex state energy {e:.6g} J inconsistent with e_total={p.e_total:.6g} J")
    return p.g * y / (0.5 * vx * vx + p.g * y)


def full_from_apex(s_bar: float, p: ModelParams) -> tuple[float, float]:
    """Apex height and forward speed (>= 0 by convention) for s_bar."""
    if not 0.0 < s_bar <= 1.0:
        raise ValueError(f"s_bar must lie in (0, 1], got {s_bar}")
    y = s_bar * p.e_total / (p.m * p.g)
    vx = math.sqrt(2.0 * (1.0 - s_bar) * p.e_total / p.m)
    return y, vx


def check_feasible(s_bar: float, alpha: float, p: ModelParams) -> bool:
    """True iff the leg fits under the body at apex: y_apex > l0 cos(alpha)."""
    y, _ = full_from_apex(s_bar, p)
    return y > p.l0 * math.cos(alpha)


def _validate_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= ALPHA_MAX + 1e-12:
        raise ValueError(
            f"alpha must lie in [0, {ALPHA_MAX:.6f}] rad, got {alpha}")


def apex_step_state(s_bar: float, alpha: float, p: ModelParams,
                    cfg: IntegratorConfig) -> tuple[Outcome, float, float]:
    """Return-map step exposing the raw next-apex state.

    Returns (outcome, y_apex, vx_apex); the apex fields are NaN unless the
    outcome is NEXT_APEX.
    """
    _validate_alpha(alpha)
    y_a, vx_a = full_from_apex(s_bar, p)
    y_td = p.l0 * math.cos(alpha)
    if y_a <= y_td:
        return Outcome.INFEASIBLE, math.nan, math.nan
    # ballistic descent to touchdown (analytic)
    t_td = math.sqrt(2.0 * (y_a - y_td) / p.g)
    vy_td = -p.g * t_td
    x_td = vx_a * t_td
    x_f = x_td + p.l0 * math.sin(alpha)
    code, _, _, y_lo, vx_lo, vy_lo = _stance.integrate_stance(
        x_td, y_td, vx_a, vy_td, x_f, p.m, p.k, p.l0, p.g,
        cfg.rel_tol, cfg.abs_tol, cfg.event_tol, cfg.max_step)
    if code == _stance.FALL:
        return Outcome.FALL, math.nan, math.nan
    if code != _stance.LIFTOFF:
        raise IntegrationError(
            f"stance integration failed (code {code}) at "
            f"s_bar={s_bar}, alpha={alpha}")
    # no apex above the liftoff point ends the gait; the sign of the
    # forward speed is irrelevant since s_bar only records the speed
    if vy_lo <= 0.0:
        return Outcome.FALL, math.nan, math.nan
    y_apex = y_lo + vy_lo * vy_lo / (2.0 * p.g)
    e = p.m * p.g * y_apex + 0.5 * p.m * vx_lo * vx_lo
    if abs(e - p.e_total) / p.e_total > 1e-6:
        raise IntegrationError(
            f"energy drift {abs(e - p.e_total) / p.e_total:.3e} at "
            f"s_bar={s_bar}, alpha={alpha}")
    return Outcome.NEXT_APEX, y_apex, vx_lo


def apex_step(s_bar: float, alpha: float, p: ModelParams,
              cfg: IntegratorConfig) -> StepOutcome:
    """One step of the apex-to-apex Poincare map."""
    outcome, y_apex, vx_apex = apex_step_state(s_bar, alpha, p, cfg)
    if outcome == Outcome.NEXT_APEX:
        return StepOutcome(Outcome.NEXT_APEX, apex_from_full(y_apex, vx_apex, p))
    return StepOutcome(outcome)


@dataclass
class Trajectory:
    """Dense time series of one apex-to-apex step."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    phase: list  # Phase per sample
    x_f: np.ndarray  # NaN in flight
    event_times: dict = field(default_factory=dict)  # touchdown/liftoff
    outcome: StepOutcome = INFEASIBLE

    def energy(self, p: ModelParams) -> np.ndarray:
        """Total mechanical energy per sample (kinetic + gravity + spring)."""
        e = 0.5 * p.m * (self.vx ** 2 + self.vy ** 2) + p.m * p.g * self.y
        for i, ph in enumerate(self.phase):
            if ph == Phase.STANCE:
                l = math.hypot(self.x[i] - self.x_f[i], self.y[i])
                e[i] += 0.5 * p.k * (p.l0 - l) ** 2
        return e


def simulate_trajectory(s_bar: float, alpha: float, p: ModelParams,
                        cfg: IntegratorConfig, dt: float = 1e-3) -> Trajectory:
    """Dense simulation of one return-map step for plotting/debugging.

    Integrates the stance phase with scipy's adaptive solver (independent
    of the compiled fast path used by apex_step); flight phases are
    analytic ballistics.
    """
    from scipy.integrate import solve_ivp

    _validate_alpha(alpha)
    y_a, vx_a = full_from_apex(s_bar, p)
    y_td = p.l0 * math.cos(alpha)
    if y_a <= y_td:
        return Trajectory(np.array([0.0]), np.array([0.0]), np.array([y_a]),
                          np.array([vx_a]), np.array([0.0]), [Phase.FLIGHT],
                          np.array([math.nan]), {}, INFEASIBLE)

    t_td = math.sqrt(2.0 * (y_a - y_td) / p.g)
    ts1 = np.append(np.arange(0.0, t_td, dt), t_td)
    seg1 = dict(t=ts1, x=vx_a * ts1, y=y_a - 0.5 * p.g * ts1 ** 2,
                vx=np.full_like(ts1, vx_a), vy=-p.g * ts1)
    x_td = vx_a * t_td
    vy_td = -p.g * t_td
    x_f = x_td + p.l0 * math.sin(alpha)

    def rhs(t, u):
        dx = u[0] - x_f
        l = math.hypot(dx, u[1])
        a = p.k / p.m * (p.l0 - l) / l
        return [u[2], u[3], a * dx, a * u[1] - p.g]

    def ev_liftoff(t, u):
        return math.hypot(u[0] - x_f, u[1]) - p.l0

    def ev_fall(t, u):
        return u[1]

    ev_liftoff.terminal = True
    ev_liftoff.direction = 1.0
    ev_fall.terminal = True
    ev_fall.direction = -1.0
    sol = solve_ivp(rhs, (0.0, _stance._T_MAX), [x_td, y_td, vx_a, vy_td],
                    method="RK45", rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=cfg.max_step, dense_output=True,
                    events=[ev_liftoff, ev_fall],
                    first_step=min(1e-4, cfg.max_step))
    if sol.status != 1:
        raise IntegrationError(
            f"no stance event located at s_bar={s_bar}, alpha={alpha}")
    t_end = sol.t[-1]
    ts2 = np.append(np.arange(0.0, t_end, dt), t_end)
    u2 = sol.sol(ts2)
    u2[:, -1] = sol.y[:, -1]
    seg2 = dict(t=t_td + ts2, x=u2[0], y=u2[1], vx=u2[2], vy=u2[3])
    events = {"touchdown": t_td}

    fell = len(sol.t_events[1]) > 0 and (
        len(sol.t_events[0]) == 0 or sol.t_events[1][0] <= sol.t_events[0][0])
    segs = [seg1, seg2]
    phases = [[Phase.FLIGHT] * len(ts1), [Phase.STANCE] * len(ts2)]
    xfs = [np.full(len(ts1), math.nan), np.full(len(ts2), x_f)]

    outcome = FALL
    if not fell:
        t_lo = t_td + t_end
        events["liftoff"] = t_lo
        x_lo, y_lo, vx_lo, vy_lo = sol.y[:, -1]
        if vy_lo > 0.0:
            t_ap = vy_lo / p.g
            ts3 = np.append(np.arange(0.0, t_ap, dt), t_ap)
            segs.append(dict(t=t_lo + ts3, x=x_lo + vx_lo * ts3,
                             y=y_lo + vy_lo * ts3 - 0.5 * p.g * ts3 ** 2,
                             vx=np.full_like(ts3, vx_lo),
                             vy=vy_lo - p.g * ts3))
            phases.append([Phase.FLIGHT] * len(ts3))
            xfs.append(np.full(len(ts3), math.nan))
            y_apex = y_lo + vy_lo ** 2 / (2.0 * p.g)
            outcome = StepOutcome(Outcome.NEXT_APEX,
                                  apex_from_full(y_apex, vx_lo, p))

    return Trajectory(
        t=np.concatenate([s["t"] for s in segs]),
        x=np.concatenate([s["x"] for s in segs]),
        y=np.concatenate([s["y"] for s in segs]),
        vx=np.concatenate([s["vx"] for s in segs]),
        vy=np.concatenate([s["vy"] for s in segs]),
        phase=[ph for seg in phases for ph in seg],
        x_f=np.concatenate(xfs),
        event_times=events,
        outcome=outcome,
    )
