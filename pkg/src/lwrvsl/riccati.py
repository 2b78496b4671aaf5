"""Closed-form LQ state feedback for the linearized traffic plant.

Linearizing the VSL-controlled LWR model around (rho_0, b_0) gives
d(drho)/dt = V d(drho)/dz + B0 u with u = db/dz and coefficients

    V  = -b_0 u_max (1 - 2 rho_0/rho_max)   (negative in free flow)
    B0 = -rho_0 u_max (1 - rho_0/rho_max)

Minimizing the quadratic cost with state weight Q0 and control weight R0
reduces, for this scalar plant, to the Riccati boundary-value problem

    V dPhi/dz = Q0 - B0^2 Phi^2 / R0,   Phi(L) = 0,

whose solution for R0 = 1 is

    Phi(z) = sqrt(Q0) (E - 1) / (B0 (E + 1)),
    E      = exp(2 B0 sqrt(Q0) (z - L) / V),

with the feedback u_opt(z) = K0(z) drho(z), K0 = -B0 Phi / R0. A
fixed-step RK4 integrator of the same boundary-value problem is kept as
an independent numerical oracle for the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fundamental import characteristic_speed, flux
from .params import Grid1D, TrafficParams
from .solvers import DensityField

DEFAULT_B_CLAMP = (0.1, 2.0)


@dataclass(frozen=True)
class RiccatiProblem:
    """Scalar coefficients of the LQ problem on [0, length].

    m_coef and c0_coef are fixed at 0 and 1 for this plant (no reaction
    term, full-state measurement) and kept as fields so the cost and
    dynamics coefficients travel together.
    """

    v_coef: float
    m_coef: float
    b0_coef: float
    c0_coef: float
    q0: float
    r0: float
    length: float

    def __post_init__(self) -> None:
        if not self.v_coef < 0.0:
            raise ValueError("v_coef must be negative (transport toward z = L)")
        if self.m_coef != 0.0:
            raise ValueError("m_coef must be 0 for the traffic plant")
        if self.b0_coef > 0.0:
            raise ValueError("b0_coef must be non-positive for the traffic plant")
        if self.c0_coef != 1.0:
            raise ValueError("c0_coef must be 1 (full-state measurement)")
        if self.q0 < 0.0:
            raise ValueError("q0 must be non-negative")
        if self.r0 <= 0.0:
            raise ValueError("r0 must be positive")
        if self.length <= 0.0:
            raise ValueError("length must be positive")


@dataclass(frozen=True)
class ControlField:
    """Per-interface control u = db/dz and the integrated VSL profile b."""

    dbdz: np.ndarray
    b_profile: np.ndarray
    timestamp: float

    def __post_init__(self) -> None:
        dbdz = np.array(self.dbdz, dtype=float)
        b_profile = np.array(self.b_profile, dtype=float)
        if dbdz.ndim != 1 or b_profile.shape != dbdz.shape:
            raise ValueError("dbdz and b_profile must be 1-D arrays of equal length")
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")
        dbdz.setflags(write=False)
        b_profile.setflags(write=False)
        object.__setattr__(self, "dbdz", dbdz)
        object.__setattr__(self, "b_profile", b_profile)


def assemble_problem(params: TrafficParams, q0: float, r0: float = 1.0) -> RiccatiProblem:
    """Build the scalar LQ coefficients from the traffic equilibrium."""
    if q0 <= 0.0:
        raise ValueError("q0 must be positive")
    if r0 <= 0.0:
        raise ValueError("r0 must be positive")
    v_coef = -characteristic_speed(params.rho_0, params.b_0, params)
    if v_coef >= 0.0:
        raise ValueError("V >= 0: uncontrollable setup (requires rho_0 < rho_max/2)")
    b0_coef = -flux(params.rho_0, 1.0, params)
    return RiccatiProblem(
        v_coef=v_coef,
        m_coef=0.0,
        b0_coef=b0_coef,
        c0_coef=1.0,
        q0=q0,
        r0=r0,
        length=params.road_length,
    )


def _check_positions(z: np.ndarray, length: float) -> None:
    if np.any(z < 0.0) or np.any(z > length):
        raise ValueError(f"position outside [0, {length}]")


def phi_closed_form(z: np.ndarray | float, problem: RiccatiProblem) -> np.ndarray | float:
    """Evaluate the closed-form Riccati solution Phi(z).

    Phi(L) = 0 exactly (the numerator vanishes bit-exactly at z = L),
    Phi >= 0, and Phi is non-increasing in z. The degenerate B0 = 0 case
    integrates V dPhi/dz = Q0 directly: Phi = Q0 (L - z) / |V|.
    """
    z_arr = np.asarray(z, dtype=float)
    _check_positions(z_arr, problem.length)
    if problem.r0 != 1.0:
        raise ValueError(
            "closed form is derived for r0 = 1; use phi_numeric_oracle for other weights"
        )
    root_q0 = math.sqrt(problem.q0)
    if problem.b0_coef == 0.0:
        phi = problem.q0 * (problem.length - z_arr) / abs(problem.v_coef)
    else:
        e = np.exp(
            2.0 * problem.b0_coef * root_q0 * (z_arr - problem.length) / problem.v_coef
        )
        phi = root_q0 * (1.0 - e) / (-problem.b0_coef * (e + 1.0))
    if np.ndim(z) == 0:
        return float(phi)
    return phi


def phi_numeric_oracle(problem: RiccatiProblem, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the Riccati boundary-value problem backward from z = L.

    Fixed-step classical RK4 on V dPhi/dz = Q0 - B0^2 Phi^2 / R0 with
    Phi(L) = 0, marching from L down to 0. Returns (z, phi) on an
    n_steps + 1 point uniform grid. Serves as an independent oracle for
    phi_closed_form and handles general r0.
    """
    if n_steps < 100:
        raise ValueError("n_steps must be at least 100")
    gain_sq = problem.b0_coef**2 / problem.r0

    def slope(p: float) -> float:
        return (problem.q0 - gain_sq * p * p) / problem.v_coef

    h = problem.length / n_steps
    phi = np.empty(n_steps + 1)
    phi[n_steps] = 0.0
    p = 0.0
    for i in range(n_steps, 0, -1):
        k1 = slope(p)
        k2 = slope(p - 0.5 * h * k1)
        k3 = slope(p - 0.5 * h * k2)
        k4 = slope(p - h * k3)
        p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi[i - 1] = p
    z = np.linspace(0.0, problem.length, n_steps + 1)
    return z, phi


def feedback_gain(z: np.ndarray | float, problem: RiccatiProblem) -> np.ndarray | float:
    """State feedback gain K0(z) = -B0 Phi(z) / R0; K0 >= 0, K0(L) = 0."""
    return -problem.b0_coef * phi_closed_form(z, problem) / problem.r0


def _interface_state(delta_rho: DensityField, problem: RiccatiProblem, grid: Grid1D) -> np.ndarray:
    if delta_rho.kind != "perturbation":
        raise ValueError("control law acts on a perturbation field")
    if delta_rho.n_cells != grid.n_cells:
        raise ValueError(
            f"grid mismatch: field has {delta_rho.n_cells} cells, grid has {grid.n_cells}"
        )
    if abs(problem.length - grid.length) > 1e-9 * grid.length:
        raise ValueError(
            f"grid mismatch: problem length {problem.length} vs grid length {grid.length}"
        )
    values = delta_rho.values
    # interior interfaces average the adjacent cells; boundary interfaces are one-sided
    return np.concatenate(
        ([values[0]], 0.5 * (values[:-1] + values[1:]), [values[-1]])
    )


def control_field(
    delta_rho: DensityField, problem: RiccatiProblem, grid: Grid1D
) -> np.ndarray:
    """Per-interface control u_opt = K0(z) drho(z) via the gain profile."""
    state = _interface_state(delta_rho, problem, grid)
    return feedback_gain(grid.interfaces, problem) * state


def control_field_explicit(
    delta_rho: DensityField, problem: RiccatiProblem, grid: Grid1D
) -> np.ndarray:
    """Per-interface control from the explicit feedback expression.

    Evaluates u_opt = -sqrt(Q0) (E - 1)/(E + 1) drho directly, without
    composing feedback_gain with phi_closed_form; kept as a second,
    independent code path for cross-checking.
    """
    state = _interface_state(delta_rho, problem, grid)
    if problem.r0 != 1.0:
        raise ValueError("explicit feedback expression is derived for r0 = 1")
    root_q0 = math.sqrt(problem.q0)
    e = np.exp(
        2.0
        * problem.b0_coef
        * root_q0
        * (grid.interfaces - problem.length)
        / problem.v_coef
    )
    return root_q0 * (1.0 - e) / (e + 1.0) * state


def integrate_vsl(
    u_opt: np.ndarray,
    b0: float,
    grid: Grid1D,
    clamp: tuple[float, float] = DEFAULT_B_CLAMP,
    timestamp: float = 0.0,
) -> ControlField:
    """Integrate u = db/dz into a speed-limit profile anchored at b(0) = b0.

    Trapezoidal cumulative integral over the interfaces, then an
    elementwise clamp to [b_min, b_max]. Zero control therefore
    reproduces the uncontrolled profile b = b0 exactly.
    """
    u = np.asarray(u_opt, dtype=float)
    if u.size != grid.n_cells + 1:
        raise ValueError("u_opt must have one value per grid interface")
    b_min, b_max = clamp
    if not b_min < b0 < b_max:
        raise ValueError(f"clamp bounds must straddle b0: need {b_min} < {b0} < {b_max}")
    increments = 0.5 * grid.dz * (u[:-1] + u[1:])
    profile = b0 + np.concatenate(([0.0], np.cumsum(increments)))
    profile = np.clip(profile, b_min, b_max)
    return ControlField(dbdz=u, b_profile=profile, timestamp=timestamp)
