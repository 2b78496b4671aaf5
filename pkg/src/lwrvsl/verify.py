"""Self-checking property suite backing the verify command.

Each check measures a quantity with an independent method and compares
it against a fixed bound: the Riccati ODE residual of the closed form,
closed form versus RK4 backward integration, discrete mass balance of
the nonlinear solver, first-order L1 convergence of both solvers on a
smooth transported bump, and the second-order shrinkage of the gap
between the linear and nonlinear models as perturbation amplitudes are
halved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fundamental import characteristic_speed
from .params import TrafficParams, make_grid, params_from_paper_units
from .riccati import RiccatiProblem, assemble_problem, phi_closed_form, phi_numeric_oracle
from .scenario import (
    REFERENCE_Q0_VALUES,
    reference_scenario,
    run_simulation,
)
from .solvers import DensityField, apply_boundary, step_linear, step_nonlinear, to_absolute

RESIDUAL_BOUND = 1e-8
ORACLE_BOUND = 1e-8
CONSERVATION_BOUND = 1e-9
CONVERGENCE_RANGE = (1.7, 2.3)
LINEARIZATION_RANGE = (3.0, 5.0)

# smooth compactly supported bump used by the convergence studies
BUMP_START = 400.0
BUMP_WIDTH = 1200.0


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one property check."""

    name: str
    passed: bool
    measured: float
    bound: str
    detail: str = ""


def _reference_params(sim_time: float) -> TrafficParams:
    return params_from_paper_units(160.0, 115.0, 50.0, 2000.0, sim_time, 1.0)


def default_problem(q0: float = 5e-5) -> RiccatiProblem:
    return assemble_problem(_reference_params(120.0), q0)


def check_phi_boundary(problem: RiccatiProblem | None = None) -> CheckResult:
    """Phi(L) must be exactly zero (bit-exact vanishing numerator)."""
    problem = problem or default_problem()
    value = phi_closed_form(problem.length, problem)
    return CheckResult(
        name="riccati-boundary",
        passed=value == 0.0,
        measured=value,
        bound="== 0 exactly",
    )


def check_riccati_residual(
    problem: RiccatiProblem | None = None,
    phi_fn=None,
    n_points: int = 10_000,
) -> CheckResult:
    """ODE residual of the closed form from 4th-order central differences.

    phi_fn defaults to phi_closed_form and is injectable so corrupted
    profiles can be shown to fail the check.
    """
    problem = problem or default_problem()
    phi_fn = phi_fn or phi_closed_form
    z = np.linspace(0.0, problem.length, n_points)
    h = z[1] - z[0]
    phi = np.asarray(phi_fn(z, problem))
    dphi = (-phi[4:] + 8.0 * phi[3:-1] - 8.0 * phi[1:-3] + phi[:-4]) / (12.0 * h)
    interior = phi[2:-2]
    residual = np.abs(
        problem.v_coef * dphi
        - (problem.q0 - problem.b0_coef**2 * interior**2 / problem.r0)
    )
    measured = float(residual.max() / problem.q0)
    return CheckResult(
        name="riccati-residual",
        passed=measured < RESIDUAL_BOUND,
        measured=measured,
        bound=f"< {RESIDUAL_BOUND:g} (relative to q0)",
    )


def check_oracle_equivalence(
    q0_values: tuple[float, ...] = REFERENCE_Q0_VALUES,
    n_steps: int = 100_000,
) -> CheckResult:
    """Closed form vs fixed-step RK4 backward integration, sup-norm relative."""
    params = _reference_params(120.0)
    worst = 0.0
    details = []
    for q0 in q0_values:
        problem = assemble_problem(params, q0)
        z, phi_oracle = phi_numeric_oracle(problem, n_steps)
        phi = phi_closed_form(z, problem)
        error = float(np.max(np.abs(phi - phi_oracle)) / np.max(phi))
        details.append(f"q0={q0:g}: {error:.3e}")
        worst = max(worst, error)
    return CheckResult(
        name="riccati-oracle",
        passed=worst < ORACLE_BOUND,
        measured=worst,
        bound=f"< {ORACLE_BOUND:g}",
        detail="; ".join(details),
    )


def check_conservation() -> CheckResult:
    """Mass balance of the closed-loop nonlinear reference run."""
    scenario = reference_scenario(model="nonlinear", q0=5e-5, control_enabled=True)
    history = run_simulation(scenario)
    defect = (
        history.total_cars_series[-1]
        - history.total_cars_series[0]
        - (history.inflow_cars - history.outflow_cars)
    )
    measured = float(abs(defect) / history.total_cars_series[0])
    return CheckResult(
        name="conservation",
        passed=measured < CONSERVATION_BOUND,
        measured=measured,
        bound=f"< {CONSERVATION_BOUND:g} (relative)",
    )


def _bump(z: np.ndarray, amplitude: float) -> np.ndarray:
    """C1 compactly supported bump: A sin^2(pi (z - z0) / w) on its support."""
    phase = (z - BUMP_START) / BUMP_WIDTH
    inside = (phase > 0.0) & (phase < 1.0)
    return np.where(inside, amplitude * np.sin(np.pi * phase) ** 2, 0.0)


def _bump_slope(z: np.ndarray, amplitude: float) -> np.ndarray:
    phase = (z - BUMP_START) / BUMP_WIDTH
    inside = (phase > 0.0) & (phase < 1.0)
    return np.where(
        inside,
        amplitude * np.pi / BUMP_WIDTH * np.sin(2.0 * np.pi * phase),
        0.0,
    )


def linear_convergence_l1_errors(
    n_cells_list: tuple[int, ...],
    final_time: float = 20.0,
    amplitude: float = 0.01,
    cfl: float = 0.5,
) -> list[float]:
    """L1 errors of the upwind perturbation solver on a transported bump.

    Zero boundary perturbation; the exact solution is the bump advected
    at the frozen speed |V|.
    """
    params = _reference_params(final_time)
    speed = characteristic_speed(params.rho_0, params.b_0, params)
    errors = []
    for n_cells in n_cells_list:
        grid = make_grid(params.road_length, n_cells)
        n_steps = math.ceil(final_time / (cfl * grid.dz / speed))
        dt = final_time / n_steps
        state = DensityField(_bump(grid.cell_centers, amplitude), "perturbation", 0.0)
        zeros = np.zeros(grid.n_cells + 1)
        for _ in range(n_steps):
            bounded = apply_boundary(state, params.rho_0, params)
            state = step_linear(bounded, zeros, grid, params, dt).field
        exact = _bump(grid.cell_centers - speed * final_time, amplitude)
        errors.append(float(np.sum(np.abs(state.values - exact)) * grid.dz))
    return errors


def _nonlinear_exact(
    z: np.ndarray, final_time: float, amplitude: float, params: TrafficParams
) -> np.ndarray:
    """Pre-shock solution by the method of characteristics plus Newton.

    Solves z0 + c(rho(z0)) t = z for the characteristic foot of every
    query point; valid while characteristics do not cross.
    """
    slope_factor = -2.0 * params.u_max / params.rho_max  # d(char speed)/d(rho)

    def char_speed(rho: np.ndarray) -> np.ndarray:
        return params.u_max * (1.0 - 2.0 * rho / params.rho_max)

    foot = z - char_speed(params.rho_0 + _bump(z, amplitude)) * final_time
    for _ in range(60):
        rho = params.rho_0 + _bump(foot, amplitude)
        g = foot + char_speed(rho) * final_time - z
        dg = 1.0 + slope_factor * _bump_slope(foot, amplitude) * final_time
        foot = foot - g / dg
    return params.rho_0 + _bump(foot, amplitude)


def nonlinear_convergence_l1_errors(
    n_cells_list: tuple[int, ...],
    final_time: float = 30.0,
    amplitude: float = 0.004,
    cfl: float = 0.5,
) -> list[float]:
    """L1 errors of the Godunov solver against the characteristics oracle."""
    params = _reference_params(final_time)
    wave_bound = characteristic_speed(params.rho_0, params.b_0, params)
    errors = []
    for n_cells in n_cells_list:
        grid = make_grid(params.road_length, n_cells)
        n_steps = math.ceil(final_time / (cfl * grid.dz / wave_bound))
        dt = final_time / n_steps
        values = params.rho_0 + _bump(grid.cell_centers, amplitude)
        state = DensityField(values, "absolute", 0.0)
        b_profile = np.full(grid.n_cells + 1, params.b_0)
        for _ in range(n_steps):
            bounded = apply_boundary(state, params.rho_0, params)
            state = step_nonlinear(bounded, b_profile, grid, params, dt).field
        exact = _nonlinear_exact(grid.cell_centers, final_time, amplitude, params)
        errors.append(float(np.sum(np.abs(state.values - exact)) * grid.dz))
    return errors


def _ratio_check(name: str, errors: list[float], bounds: tuple[float, float]) -> CheckResult:
    ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    low, high = bounds
    passed = all(low <= r <= high for r in ratios)
    worst = max(ratios, key=lambda r: abs(r - 0.5 * (low + high)))
    return CheckResult(
        name=name,
        passed=passed,
        measured=float(worst),
        bound=f"in [{low}, {high}]",
        detail="ratios: " + ", ".join(f"{r:.3f}" for r in ratios),
    )


def check_convergence_linear(n_cells_list: tuple[int, ...] = (100, 200, 400)) -> CheckResult:
    return _ratio_check(
        "convergence-linear", linear_convergence_l1_errors(n_cells_list), CONVERGENCE_RANGE
    )


def check_convergence_nonlinear(n_cells_list: tuple[int, ...] = (100, 200, 400)) -> CheckResult:
    return _ratio_check(
        "convergence-nonlinear",
        nonlinear_convergence_l1_errors(n_cells_list),
        CONVERGENCE_RANGE,
    )


def check_convergence_coarse() -> CheckResult:
    """One refinement from a deliberately coarse 8-cell grid."""
    return _ratio_check(
        "convergence-coarse", linear_convergence_l1_errors((8, 16)), CONVERGENCE_RANGE
    )


def linearization_gaps(scales: tuple[float, ...] = (1.0, 0.5, 0.25)) -> list[float]:
    """Sup-norm gap at final time between the two models, control off.

    Both models run from identically scaled initial and boundary
    perturbations on the same grid with the same fixed step, so the gap
    isolates the linearization remainder.
    """
    gaps = []
    for scale in scales:
        linear = run_simulation(
            reference_scenario(model="linear", control_enabled=False, amplitude_scale=scale)
        )
        nonlinear = run_simulation(
            reference_scenario(model="nonlinear", control_enabled=False, amplitude_scale=scale)
        )
        params = reference_scenario(control_enabled=False).params
        lin_final = to_absolute(linear.density_frames[-1], params).values
        non_final = nonlinear.density_frames[-1].values
        gaps.append(float(np.max(np.abs(lin_final - non_final))))
    return gaps


def check_linearization() -> CheckResult:
    gaps = linearization_gaps()
    return _ratio_check("linearization", gaps, LINEARIZATION_RANGE)


def run_all_checks() -> list[CheckResult]:
    """The full suite, in a fixed order."""
    return [
        check_phi_boundary(),
        check_riccati_residual(),
        check_oracle_equivalence(),
        check_conservation(),
        check_convergence_linear(),
        check_convergence_nonlinear(),
        check_convergence_coarse(),
        check_linearization(),
    ]
