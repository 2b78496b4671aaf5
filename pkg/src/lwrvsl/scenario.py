"""Case-study scenarios, closed-loop simulation, and summary metrics.

The reference scenario starts from a sinusoidal density bump,
rho(0, z) = rho_0 + A sin(pi z / L), and drives the upstream boundary
with a damped oscillation on a linear ramp,
rho(t, 0) = rho_0 + A_b exp(-kappa t) sin(pi t / P) + gamma t.
All amplitudes stay inside the free-flow band (0, rho_max / 2).

run_simulation closes the loop: at every step the current perturbation
field feeds the LQ control law, the control integrates to a VSL profile,
and the chosen plant (linear perturbation transport or nonlinear LWR)
advances one explicit step. The nonlinear plant reuses the linear
feedback law on its live perturbation rho - rho_0.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .fundamental import vsl_speed
from .params import Grid1D, M_PER_KM, TrafficParams, make_grid, params_from_paper_units
from .riccati import DEFAULT_B_CLAMP, assemble_problem, control_field, integrate_vsl
from .solvers import (
    DensityField,
    SolverError,
    apply_boundary,
    step_linear,
    step_nonlinear,
    to_absolute,
)

MODELS = ("linear", "nonlinear")

# Reference parameters as quoted: densities in cars/km, speed in km/h.
REFERENCE_RHO_MAX = 160.0
REFERENCE_U_MAX = 115.0
REFERENCE_RHO_0 = 50.0
REFERENCE_ROAD_LENGTH = 2000.0
REFERENCE_SIM_TIME = 120.0
REFERENCE_B_0 = 1.0
REFERENCE_Q0_VALUES = (1e-6, 1e-5, 5e-5, 5e-4)


@dataclass(frozen=True)
class Scenario:
    """A closed-loop experiment definition.

    Amplitude fields keep the boundary-data units they are quoted in
    (cars/km and seconds); conversion to SI happens where the profiles
    are evaluated.
    """

    params: TrafficParams
    grid: Grid1D
    q0: float
    bc_decay_rate: float  # 1/s
    bc_growth_rate: float  # cars/km per s
    ic_amplitude: float = 10.0  # cars/km
    bc_osc_amplitude: float = 5.0  # cars/km
    bc_osc_period: float = 20.0  # s
    r0: float = 1.0
    control_enabled: bool = True
    model: str = "linear"
    clamp: tuple[float, float] = DEFAULT_B_CLAMP

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.q0 <= 0.0:
            raise ValueError("q0 must be positive")
        if self.r0 <= 0.0:
            raise ValueError("r0 must be positive")
        if self.bc_osc_period <= 0.0:
            raise ValueError("bc_osc_period must be positive")
        if self.bc_decay_rate < 0.0:
            raise ValueError("bc_decay_rate must be non-negative")
        b_min, b_max = self.clamp
        if not b_min < self.params.b_0 < b_max:
            raise ValueError(
                f"clamp bounds must straddle b_0: need {b_min} < {self.params.b_0} < {b_max}"
            )
        self._check_free_flow()

    def _check_free_flow(self) -> None:
        # conservative bounds on the initial and boundary data
        p = self.params
        ic_amp = self.ic_amplitude / M_PER_KM
        bc_amp = abs(self.bc_osc_amplitude) / M_PER_KM
        growth = self.bc_growth_rate / M_PER_KM * p.sim_time
        low = min(p.rho_0 + min(ic_amp, 0.0), p.rho_0 - bc_amp + min(growth, 0.0))
        high = max(p.rho_0 + max(ic_amp, 0.0), p.rho_0 + bc_amp + max(growth, 0.0))
        if low <= 0.0 or high >= p.rho_max / 2.0:
            raise ValueError(
                "initial or boundary data leaves the free-flow band "
                f"(0, rho_max/2): bounds [{low}, {high}] vs (0, {p.rho_max / 2.0})"
            )


@dataclass(frozen=True)
class SimulationHistory:
    """Time-indexed record of one run, sampled at the output cadence.

    density_frames keep the solver's native kind (perturbation for the
    linear model, absolute for the nonlinear model); speeds are m/s per
    cell, vsl_frames the dimensionless b per interface, control_frames
    db/dz per interface. inflow_cars and outflow_cars accumulate the
    time-integrated boundary interface fluxes of the solver.
    """

    times: np.ndarray
    density_frames: tuple[DensityField, ...]
    speed_frames: tuple[np.ndarray, ...]
    vsl_frames: tuple[np.ndarray, ...]
    control_frames: tuple[np.ndarray, ...]
    total_cars_series: np.ndarray
    inflow_cars: float
    outflow_cars: float

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        totals = np.array(self.total_cars_series, dtype=float)
        n = times.size
        frame_sets = (
            self.density_frames,
            self.speed_frames,
            self.vsl_frames,
            self.control_frames,
        )
        if any(len(frames) != n for frames in frame_sets) or totals.size != n:
            raise ValueError("all frame sequences must share the length of times")
        times.setflags(write=False)
        totals.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "total_cars_series", totals)


@dataclass(frozen=True)
class SweepResult:
    """One member of a q0 sweep: the run plus its regulation summary."""

    q0: float
    history: SimulationHistory
    final_total_cars: float
    time_to_target: float | None


def reference_scenario(
    *,
    model: str = "linear",
    q0: float = 5e-5,
    control_enabled: bool = True,
    n_cells: int = 400,
    bc_reading: str = "km",
    amplitude_scale: float = 1.0,
    sim_time: float = REFERENCE_SIM_TIME,
    clamp: tuple[float, float] = DEFAULT_B_CLAMP,
    r0: float = 1.0,
) -> Scenario:
    """Build the reference scenario with the tabulated parameters.

    bc_reading selects how the boundary ramp coefficients read the road
    length: "km" gives decay L_km * 1e-6 and growth 1/(4 L_km) cars/km/s
    (the default, which produces the rising upstream density), "m" uses
    the length in meters, making both terms negligible over the run.
    amplitude_scale multiplies every perturbation amplitude, for
    linearization studies.
    """
    params = params_from_paper_units(
        REFERENCE_RHO_MAX, REFERENCE_U_MAX, REFERENCE_RHO_0, REFERENCE_ROAD_LENGTH, sim_time, REFERENCE_B_0
    )
    grid = make_grid(params.road_length, n_cells)
    if bc_reading == "km":
        length_scale = params.road_length / 1000.0
    elif bc_reading == "m":
        length_scale = params.road_length
    else:
        raise ValueError(f"bc_reading must be 'km' or 'm', got {bc_reading!r}")
    return Scenario(
        params=params,
        grid=grid,
        q0=q0,
        bc_decay_rate=length_scale * 1e-6,
        bc_growth_rate=amplitude_scale / (4.0 * length_scale),
        ic_amplitude=10.0 * amplitude_scale,
        bc_osc_amplitude=5.0 * amplitude_scale,
        r0=r0,
        control_enabled=control_enabled,
        model=model,
        clamp=clamp,
    )


def initial_condition(z: np.ndarray | float, scenario: Scenario) -> np.ndarray | float:
    """Initial density rho_0 + A sin(pi z / L) in cars/m."""
    p = scenario.params
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0.0) or np.any(z_arr > p.road_length):
        raise ValueError(f"position outside [0, {p.road_length}]")
    amplitude = scenario.ic_amplitude / M_PER_KM
    rho = p.rho_0 + amplitude * np.sin(np.pi * z_arr / p.road_length)
    if np.ndim(z) == 0:
        return float(rho)
    return rho


def upstream_boundary(t: np.ndarray | float, scenario: Scenario) -> np.ndarray | float:
    """Upstream density rho_0 + A_b exp(-kappa t) sin(pi t / P) + gamma t, cars/m."""
    p = scenario.params
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > p.sim_time):
        raise ValueError(f"time outside [0, {p.sim_time}]")
    osc_amp = scenario.bc_osc_amplitude / M_PER_KM
    growth = scenario.bc_growth_rate / M_PER_KM
    rho = (
        p.rho_0
        + osc_amp
        * np.exp(-scenario.bc_decay_rate * t_arr)
        * np.sin(np.pi * t_arr / scenario.bc_osc_period)
        + growth * t_arr
    )
    if np.ndim(t) == 0:
        return float(rho)
    return rho


def total_cars(field: DensityField, grid: Grid1D) -> float:
    """Spatial integral of density over the road: sum rho_i dz, in cars."""
    if field.kind != "absolute":
        raise ValueError(
            "total_cars needs an absolute density field; shift perturbations by rho_0 first"
        )
    if field.n_cells != grid.n_cells:
        raise ValueError(
            f"grid mismatch: field has {field.n_cells} cells, grid has {grid.n_cells}"
        )
    return float(np.sum(field.values) * grid.dz)


def target_cars(params: TrafficParams) -> float:
    """The regulation target: the equilibrium car count rho_0 * L."""
    return params.rho_0 * params.road_length


def time_to_target(history: SimulationHistory, target: float, tolerance: float = 0.05) -> float | None:
    """First recorded time from which total cars stays within tolerance*target.

    Returns None when the series never settles into the band through the
    end of the run.
    """
    within = np.abs(history.total_cars_series - target) <= tolerance * target
    if bool(within.all()):
        return float(history.times[0])
    bad = np.flatnonzero(~within)
    last_bad = int(bad[-1])
    if last_bad == within.size - 1:
        return None
    return float(history.times[last_bad + 1])


def run_simulation(
    scenario: Scenario, frame_interval: float = 0.5, cfl: float = 0.9
) -> SimulationHistory:
    """Advance the chosen plant over [0, T] under quasi-static feedback.

    Per step: evaluate the perturbation field, recompute the control and
    VSL profile from it (when enabled), attach boundary ghosts at the
    current time, and take one explicit step. The step size is fixed
    from the worst-case wave speed b_cap * u_max (b_cap being the clamp
    ceiling when control is on, else b_0) and shortened only to land
    exactly on frame instants. Frames record density, speed, VSL rate,
    control, and total cars every frame_interval seconds.
    """
    if frame_interval <= 0.0:
        raise ValueError("frame_interval must be positive")
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must lie in (0, 1]")
    p = scenario.params
    grid = scenario.grid
    linear = scenario.model == "linear"
    problem = (
        assemble_problem(p, scenario.q0, scenario.r0) if scenario.control_enabled else None
    )

    ic = initial_condition(grid.cell_centers, scenario)
    values0 = ic - p.rho_0 if linear else ic
    state = DensityField(values0, "perturbation" if linear else "absolute", 0.0)

    b_cap = scenario.clamp[1] if scenario.control_enabled else p.b_0
    dt_fixed = cfl * grid.dz / (b_cap * p.u_max)
    zero_control = np.zeros(grid.n_cells + 1)
    base_profile = np.full(grid.n_cells + 1, p.b_0)

    def controls(field: DensityField) -> tuple[np.ndarray, np.ndarray]:
        if problem is None:
            return zero_control, base_profile
        delta = (
            field
            if linear
            else DensityField(field.values - p.rho_0, "perturbation", field.time)
        )
        u_opt = control_field(delta, problem, grid)
        vsl = integrate_vsl(u_opt, p.b_0, grid, scenario.clamp, timestamp=field.time)
        return u_opt, vsl.b_profile

    times: list[float] = []
    density_frames: list[DensityField] = []
    speed_frames: list[np.ndarray] = []
    vsl_frames: list[np.ndarray] = []
    control_frames: list[np.ndarray] = []
    totals: list[float] = []
    inflow = 0.0
    outflow = 0.0

    def record(field: DensityField) -> None:
        u_opt, b_profile = controls(field)
        absolute = to_absolute(field, p)
        b_cells = 0.5 * (b_profile[:-1] + b_profile[1:])
        times.append(field.time)
        density_frames.append(field)
        speed_frames.append(vsl_speed(absolute.values, b_cells, p))
        vsl_frames.append(b_profile)
        control_frames.append(u_opt)
        totals.append(total_cars(absolute, grid))

    record(state)
    t = 0.0
    frame_index = 1
    while t < p.sim_time - 1e-9:
        next_frame = min(frame_index * frame_interval, p.sim_time)
        u_opt, b_profile = controls(state)
        at_frame = t + dt_fixed >= next_frame - 1e-12
        dt = next_frame - t if at_frame else dt_fixed
        bounded = apply_boundary(state, upstream_boundary(t, scenario), p)
        if linear:
            result = step_linear(bounded, u_opt, grid, p, dt)
        else:
            result = step_nonlinear(bounded, b_profile, grid, p, dt)
        inflow += dt * result.interface_fluxes[0]
        outflow += dt * result.interface_fluxes[-1]
        t = next_frame if at_frame else t + dt
        state = dataclasses.replace(result.field, time=t)
        if linear:
            absolute = state.values + p.rho_0
            if absolute.min() < 0.0 or absolute.max() > p.rho_max:
                raise SolverError(
                    f"density left [0, rho_max] in the linear run at t={t}"
                )
        if at_frame:
            record(state)
            frame_index += 1
    return SimulationHistory(
        times=np.array(times),
        density_frames=tuple(density_frames),
        speed_frames=tuple(speed_frames),
        vsl_frames=tuple(vsl_frames),
        control_frames=tuple(control_frames),
        total_cars_series=np.array(totals),
        inflow_cars=inflow,
        outflow_cars=outflow,
    )


def sweep_q0(
    scenario: Scenario,
    q0_list: list[float],
    frame_interval: float = 0.5,
    cfl: float = 0.9,
) -> list[SweepResult]:
    """Run one simulation per q0, identical otherwise.

    Failures propagate tagged with the offending q0. Summaries carry the
    final car count and the time after which the count stays within 5%
    of the target.
    """
    if len(q0_list) == 0:
        raise ValueError("q0_list must be non-empty")
    target = target_cars(scenario.params)
    results = []
    for q0 in q0_list:
        try:
            member = dataclasses.replace(scenario, q0=q0)
            history = run_simulation(member, frame_interval, cfl)
        except Exception as exc:
            raise SolverError(f"sweep member q0={q0} failed: {exc}") from exc
        results.append(
            SweepResult(
                q0=q0,
                history=history,
                final_total_cars=float(history.total_cars_series[-1]),
                time_to_target=time_to_target(history, target),
            )
        )
    return results
