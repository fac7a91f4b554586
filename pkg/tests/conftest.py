import pytest

from sliprl.slip import IntegratorConfig, ModelParams
from sliprl.viability import (GridSpec, compute_transition_grid,
                              compute_viability_kernel, fit_reference_policy,
                              neutral_curve)


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def integrator():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def coarse_grid(params, integrator):
    """101x76 transition grid: fast, adequate for property checks."""
    return compute_transition_grid(GridSpec(n_s=101, n_alpha=76),
                                   params, integrator)


@pytest.fixture(scope="session")
def coarse_kernel(coarse_grid):
    return compute_viability_kernel(coarse_grid)


@pytest.fixture(scope="session")
def coarse_fit(coarse_grid, integrator):
    return fit_reference_policy(neutral_curve(coarse_grid, integrator))
