"""Shared fixtures: reference parameters and the full-length reference runs.

The sweep and baseline fixtures are session-scoped because each one holds
four (or one) complete 120 s simulations at the default 400-cell grid;
they are shared across the acceptance tests.
"""

import pytest

from lwrvsl import (
    REFERENCE_Q0_VALUES,
    make_grid,
    reference_scenario,
    params_from_paper_units,
    run_simulation,
    sweep_q0,
)


@pytest.fixture(scope="session")
def reference_params():
    return params_from_paper_units(160.0, 115.0, 50.0, 2000.0, 120.0, 1.0)


@pytest.fixture(scope="session")
def reference_grid():
    return make_grid(2000.0, 400)


@pytest.fixture(scope="session")
def linear_sweep():
    return sweep_q0(reference_scenario(model="linear"), list(REFERENCE_Q0_VALUES))


@pytest.fixture(scope="session")
def nonlinear_sweep():
    return sweep_q0(reference_scenario(model="nonlinear"), list(REFERENCE_Q0_VALUES))


@pytest.fixture(scope="session")
def linear_baseline():
    return run_simulation(reference_scenario(model="linear", control_enabled=False))


@pytest.fixture(scope="session")
def nonlinear_baseline():
    return run_simulation(reference_scenario(model="nonlinear", control_enabled=False))
