"""SLIP hopper viability and learning toolkit."""

__version__ = "0.1.0"

from .slip import (ALPHA_MAX, ModelParams, IntegratorConfig, Outcome,
                   StepOutcome, apex_from_full, full_from_apex,
                   check_feasible, apex_step, simulate_trajectory)
