"""Linear Gaussian policy over the normalized apex height.

Action: alpha ~ N(theta0 * s_bar + theta1, sigma^2). Draws are returned
unclamped; an action outside the mechanical range [0, ALPHA_MAX] is an
execution failure handled by the episode loop. All angles in radians
internally; serialization uses degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .slip import ALPHA_MAX


@dataclass(frozen=True)
class PolicyParams:
    theta0: float  # slope, rad per unit s_bar
    theta1: float  # offset, rad
    sigma: float   # exploration std-dev, rad

    def __post_init__(self):
        if not (math.isfinite(self.theta0) and math.isfinite(self.theta1)):
            raise ValueError("theta0 and theta1 must be finite")
        if not self.sigma > 0:
            raise ValueError("sigma must be strictly positive")

    def to_json_dict(self) -> dict:
        return {
            "theta0_deg_per_s": math.degrees(self.theta0),
            "theta1_deg": math.degrees(self.theta1),
            "sigma_deg": math.degrees(self.sigma),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PolicyParams":
        return cls(theta0=math.radians(d["theta0_deg_per_s"]),
                   theta1=math.radians(d["theta1_deg"]),
                   sigma=math.radians(d["sigma_deg"]))


def sigma_from_variance_deg2(variance_deg2: float) -> float:
    """Exploration std-dev in radians from a variance quoted in deg^2."""
    if variance_deg2 <= 0:
        raise ValueError("variance must be strictly positive")
    return math.radians(math.sqrt(variance_deg2))


def mean_action(pp: PolicyParams, s_bar: float) -> float:
    """Greedy (unclamped) action for state s_bar."""
    return pp.theta0 * s_bar + pp.theta1


def sample_action(pp: PolicyParams, s_bar: float,
                  rng: np.random.Generator) -> float:
    """Draw an action from the Gaussian; may fall outside [0, ALPHA_MAX]."""
    return rng.normal(mean_action(pp, s_bar), pp.sigma)


def action_in_range(a: float) -> bool:
    return 0.0 <= a <= ALPHA_MAX


def score(pp: PolicyParams, s_bar: float, a: float) -> tuple[float, float]:
    """Likelihood-ratio gradient of log pi(a|s) wrt (theta0, theta1)."""
    z = (a - mean_action(pp, s_bar)) / (pp.sigma * pp.sigma)
    return z * s_bar, z


def log_density(pp: PolicyParams, s_bar: float, a: float) -> float:
    """Unclamped Gaussian log-density (reference for gradient checks)."""
    mu = mean_action(pp, s_bar)
    return (-0.5 * ((a - mu) / pp.sigma) ** 2
            - math.log(pp.sigma * math.sqrt(2.0 * math.pi)))
