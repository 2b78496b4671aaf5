"""Artifact writers: wide CSV series, JSON summaries, and static SVG plots.

All emitted quantities use road units at the file boundary: densities in
cars/km, speeds in km/h, positions in m, times in s, as labeled in the
headers. CSV files use '.' decimals, ',' separators, LF line endings,
time in the first column and one column per position, printed with 17
significant digits so parsing recovers the emitted values exactly. SVG
output is self-contained with a fixed 64-step colormap.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .params import KMH_PER_MPS, M_PER_KM
from .riccati import assemble_problem, feedback_gain, phi_closed_form
from .scenario import Scenario, SimulationHistory, target_cars, time_to_target
from .solvers import to_absolute

_COLORMAP_ANCHORS = (
    (68, 1, 84),
    (72, 40, 120),
    (62, 74, 137),
    (49, 104, 142),
    (38, 130, 142),
    (31, 158, 137),
    (53, 183, 121),
    (109, 205, 89),
    (180, 222, 44),
    (253, 231, 37),
)


def _build_palette(n: int = 64) -> tuple[str, ...]:
    colors = []
    for i in range(n):
        x = i / (n - 1) * (len(_COLORMAP_ANCHORS) - 1)
        j = min(int(x), len(_COLORMAP_ANCHORS) - 2)
        frac = x - j
        rgb = tuple(
            round(a + (b - a) * frac)
            for a, b in zip(_COLORMAP_ANCHORS[j], _COLORMAP_ANCHORS[j + 1])
        )
        colors.append("#%02x%02x%02x" % rgb)
    return tuple(colors)


PALETTE = _build_palette()
_LINE_COLORS = ("#440154", "#31688e", "#35b779", "#b4de2c", "#d1495b", "#17bebb")


def fmt_float(value: float) -> str:
    return format(float(value), ".17g")


def write_wide_csv(
    path: Path,
    corner: str,
    position_prefix: str,
    positions: np.ndarray,
    times: np.ndarray,
    matrix: np.ndarray,
) -> None:
    """One row per instant, one column per position, 17-digit values."""
    with open(path, "w", newline="\n") as fh:
        header = [corner] + [f"{position_prefix}{fmt_float(p)}" for p in positions]
        fh.write(",".join(header) + "\n")
        for t, row in zip(times, matrix):
            fh.write(",".join([fmt_float(t)] + [fmt_float(v) for v in row]) + "\n")


def write_total_cars_csv(path: Path, times: np.ndarray, totals: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t_s,total_cars\n")
        for t, n in zip(times, totals):
            fh.write(f"{fmt_float(t)},{fmt_float(n)}\n")


def write_json(path: Path, payload: dict) -> None:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_summary(
    scenario: Scenario, history: SimulationHistory, cfl: float, cadence: float
) -> dict:
    """Stable-keyed summary of one run, in road units."""
    p = scenario.params
    absolute = [to_absolute(frame, p).values for frame in history.density_frames]
    min_density = min(float(values.min()) for values in absolute)
    max_density = max(float(values.max()) for values in absolute)
    target = target_cars(p)
    summary = {
        "model": scenario.model,
        "control_enabled": scenario.control_enabled,
        "q0": scenario.q0,
        "r0": scenario.r0,
        "n_cells": scenario.grid.n_cells,
        "cfl": cfl,
        "output_cadence_s": cadence,
        "frames": int(history.times.size),
        "params": {
            "rho_max_per_km": p.rho_max * M_PER_KM,
            "u_max_kph": p.u_max * KMH_PER_MPS,
            "rho_0_per_km": p.rho_0 * M_PER_KM,
            "b_0": p.b_0,
            "road_length_m": p.road_length,
            "sim_time_s": p.sim_time,
        },
        "scenario": {
            "ic_amplitude_per_km": scenario.ic_amplitude,
            "bc_osc_amplitude_per_km": scenario.bc_osc_amplitude,
            "bc_osc_period_s": scenario.bc_osc_period,
            "bc_decay_rate_per_s": scenario.bc_decay_rate,
            "bc_growth_rate_per_km_s": scenario.bc_growth_rate,
            "b_min": scenario.clamp[0],
            "b_max": scenario.clamp[1],
        },
        "target_cars": target,
        "initial_total_cars": float(history.total_cars_series[0]),
        "final_total_cars": float(history.total_cars_series[-1]),
        "min_density_per_km": min_density * M_PER_KM,
        "max_density_per_km": max_density * M_PER_KM,
        "time_to_target_s": time_to_target(history, target),
    }
    if scenario.model == "nonlinear":
        defect = (
            history.total_cars_series[-1]
            - history.total_cars_series[0]
            - (history.inflow_cars - history.outflow_cars)
        )
        summary["mass_balance"] = {
            "inflow_cars": history.inflow_cars,
            "outflow_cars": history.outflow_cars,
            "defect_cars": float(defect),
            "defect_relative": float(abs(defect) / history.total_cars_series[0]),
        }
    return summary


def _svg_open(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _text(x: float, y: float, content: str, anchor: str = "middle", extra: str = "") -> str:
    return (
        f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" '
        f'fill="#222222"{extra}>{content}</text>'
    )


def _ticks(low: float, high: float, count: int = 5) -> np.ndarray:
    return np.linspace(low, high, count)


def svg_heatmap(
    path: Path,
    times: np.ndarray,
    positions: np.ndarray,
    matrix: np.ndarray,
    *,
    title: str,
    value_label: str,
) -> None:
    """Self-contained (z, t) heatmap: position across, time upward."""
    width, height = 720, 520
    left, right, top, bottom = 80, 130, 50, 60
    plot_w, plot_h = width - left - right, height - top - bottom

    stride_t = max(1, int(np.ceil(times.size / 240)))
    stride_z = max(1, int(np.ceil(positions.size / 240)))
    t_sub = times[::stride_t]
    z_sub = positions[::stride_z]
    m_sub = matrix[::stride_t, ::stride_z]

    vmin, vmax = float(m_sub.min()), float(m_sub.max())
    span = vmax - vmin
    parts = _svg_open(width, height)
    parts.append(_text(width / 2, 24, f"{title} [{value_label}]"))

    cell_w = plot_w / m_sub.shape[1]
    cell_h = plot_h / m_sub.shape[0]
    for i in range(m_sub.shape[0]):
        # time increases upward: row 0 sits at the bottom of the plot
        y = top + plot_h - (i + 1) * cell_h
        for j in range(m_sub.shape[1]):
            value = m_sub[i, j]
            index = 0 if span == 0.0 else int((value - vmin) / span * (len(PALETTE) - 1))
            index = min(max(index, 0), len(PALETTE) - 1)
            parts.append(
                f'<rect x="{left + j * cell_w:.2f}" y="{y:.2f}" '
                f'width="{cell_w + 0.5:.2f}" height="{cell_h + 0.5:.2f}" '
                f'fill="{PALETTE[index]}"/>'
            )

    parts.append(
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#222222"/>'
    )
    for z in _ticks(float(positions[0]), float(positions[-1])):
        x = left + (z - positions[0]) / max(positions[-1] - positions[0], 1e-300) * plot_w
        parts.append(f'<line x1="{x:.2f}" y1="{top + plot_h}" x2="{x:.2f}" '
                     f'y2="{top + plot_h + 5}" stroke="#222222"/>')
        parts.append(_text(x, top + plot_h + 20, f"{z:.6g}"))
    for t in _ticks(float(times[0]), float(times[-1])):
        y = top + plot_h - (t - times[0]) / max(times[-1] - times[0], 1e-300) * plot_h
        parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" '
                     f'y2="{y:.2f}" stroke="#222222"/>')
        parts.append(_text(left - 10, y + 4, f"{t:.6g}", anchor="end"))
    parts.append(_text(left + plot_w / 2, height - 16, "z [m]"))
    parts.append(
        _text(24, top + plot_h / 2, "t [s]",
              extra=f' transform="rotate(-90 24 {top + plot_h / 2:.2f})"')
    )

    bar_x = width - right + 30
    bar_h = plot_h / len(PALETTE)
    for k, color in enumerate(PALETTE):
        y = top + plot_h - (k + 1) * bar_h
        parts.append(
            f'<rect x="{bar_x}" y="{y:.2f}" width="18" height="{bar_h + 0.5:.2f}" '
            f'fill="{color}"/>'
        )
    parts.append(
        f'<rect x="{bar_x}" y="{top}" width="18" height="{plot_h}" '
        'fill="none" stroke="#222222"/>'
    )
    parts.append(_text(bar_x + 26, top + plot_h + 4, f"{vmin:.6g}", anchor="start"))
    parts.append(_text(bar_x + 26, top + 10, f"{vmax:.6g}", anchor="start"))
    parts.append(
        _text(bar_x + 26, top + plot_h / 2 + 4, f"{(vmin + vmax) / 2:.6g}", anchor="start")
    )
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def svg_lineplot(
    path: Path,
    x: np.ndarray,
    series: list[tuple[str, np.ndarray]],
    *,
    title: str,
    x_label: str,
    y_label: str,
) -> None:
    """Self-contained family-of-curves plot with a simple legend."""
    width, height = 720, 480
    left, right, top, bottom = 90, 40, 50, 60
    plot_w, plot_h = width - left - right, height - top - bottom

    y_min = min(float(np.min(y)) for _, y in series)
    y_max = max(float(np.max(y)) for _, y in series)
    if y_max == y_min:
        y_max = y_min + 1.0
    pad = 0.05 * (y_max - y_min)
    y_lo, y_hi = y_min - pad, y_max + pad
    x_lo, x_hi = float(x[0]), float(x[-1])

    def sx(value: float) -> float:
        return left + (value - x_lo) / (x_hi - x_lo) * plot_w

    def sy(value: float) -> float:
        return top + plot_h - (value - y_lo) / (y_hi - y_lo) * plot_h

    parts = _svg_open(width, height)
    parts.append(_text(width / 2, 24, title))
    parts.append(
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#222222"/>'
    )
    for tick in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(tick):.2f}" y1="{top + plot_h}" '
                     f'x2="{sx(tick):.2f}" y2="{top + plot_h + 5}" stroke="#222222"/>')
        parts.append(_text(sx(tick), top + plot_h + 20, f"{tick:.6g}"))
    for tick in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{left - 5}" y1="{sy(tick):.2f}" '
                     f'x2="{left}" y2="{sy(tick):.2f}" stroke="#222222"/>')
        parts.append(_text(left - 10, sy(tick) + 4, f"{tick:.4g}", anchor="end"))
    parts.append(_text(left + plot_w / 2, height - 16, x_label))
    parts.append(
        _text(26, top + plot_h / 2, y_label,
              extra=f' transform="rotate(-90 26 {top + plot_h / 2:.2f})"')
    )
    for k, (label, y) in enumerate(series):
        color = _LINE_COLORS[k % len(_LINE_COLORS)]
        points = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, y))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        legend_y = top + 16 + 16 * k
        parts.append(f'<line x1="{left + plot_w - 120}" y1="{legend_y - 4}" '
                     f'x2="{left + plot_w - 96}" y2="{legend_y - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(_text(left + plot_w - 90, legend_y, label, anchor="start"))
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def write_run_artifacts(
    out_dir: Path | str,
    scenario: Scenario,
    history: SimulationHistory,
    formats: tuple[str, ...],
    cfl: float,
    cadence: float,
) -> list[Path]:
    """Write the per-run file set; on failure remove partial files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = scenario.params
    grid = scenario.grid
    density = np.stack(
        [to_absolute(frame, p).values for frame in history.density_frames]
    ) * M_PER_KM
    speed = np.stack(history.speed_frames) * KMH_PER_MPS
    vsl = np.stack(history.vsl_frames)
    control = np.stack(history.control_frames)

    written: list[Path] = []

    def reserve(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    try:
        if "csv" in formats:
            write_wide_csv(
                reserve("density.csv"), "t_s/density_cars_per_km", "z_m=",
                grid.cell_centers, history.times, density,
            )
            write_wide_csv(
                reserve("speed.csv"), "t_s/speed_kph", "z_m=",
                grid.cell_centers, history.times, speed,
            )
            write_wide_csv(
                reserve("vsl.csv"), "t_s/vsl_rate", "z_m=",
                grid.interfaces, history.times, vsl,
            )
            write_wide_csv(
                reserve("control.csv"), "t_s/dbdz_per_m", "z_m=",
                grid.interfaces, history.times, control,
            )
            write_total_cars_csv(
                reserve("total_cars.csv"), history.times, history.total_cars_series
            )
        if "json" in formats:
            write_json(reserve("summary.json"), run_summary(scenario, history, cfl, cadence))
        if "svg" in formats:
            svg_heatmap(
                reserve("density.svg"), history.times, grid.cell_centers, density,
                title="Density", value_label="cars/km",
            )
            svg_heatmap(
                reserve("speed.svg"), history.times, grid.cell_centers, speed,
                title="Speed", value_label="km/h",
            )
            svg_heatmap(
                reserve("vsl.svg"), history.times, grid.interfaces, vsl,
                title="VSL rate b", value_label="-",
            )
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def write_riccati_artifacts(
    out_dir: Path | str,
    scenario: Scenario,
    q0_values: list[float],
    formats: tuple[str, ...],
) -> list[Path]:
    """Phi and gain profiles per q0: CSV columns, JSON endpoints, SVG curves."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    z = scenario.grid.interfaces
    profiles = []
    for q0 in q0_values:
        problem = assemble_problem(scenario.params, q0, scenario.r0)
        profiles.append((q0, phi_closed_form(z, problem), feedback_gain(z, problem)))

    written: list[Path] = []

    def reserve(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    try:
        if "csv" in formats:
            with open(reserve("riccati.csv"), "w", newline="\n") as fh:
                header = ["z_m"]
                for q0, _, _ in profiles:
                    header.append(f"phi[q0={q0:.6g}]")
                    header.append(f"k0_per_m[q0={q0:.6g}]")
                fh.write(",".join(header) + "\n")
                for i, zi in enumerate(z):
                    row = [fmt_float(zi)]
                    for _, phi, gain in profiles:
                        row.append(fmt_float(phi[i]))
                        row.append(fmt_float(gain[i]))
                    fh.write(",".join(row) + "\n")
        if "json" in formats:
            payload = {
                "q0_values": list(q0_values),
                "phi_at_0": {f"{q0:.6g}": float(phi[0]) for q0, phi, _ in profiles},
                "gain_at_0_per_m": {f"{q0:.6g}": float(g[0]) for q0, _, g in profiles},
                "road_length_m": scenario.params.road_length,
            }
            write_json(reserve("riccati_summary.json"), payload)
        if "svg" in formats:
            svg_lineplot(
                reserve("riccati_phi.svg"), z,
                [(f"q0={q0:.6g}", phi) for q0, phi, _ in profiles],
                title="State feedback function Phi(z)", x_label="z [m]", y_label="Phi",
            )
            svg_lineplot(
                reserve("riccati_gain.svg"), z,
                [(f"q0={q0:.6g}", gain) for q0, _, gain in profiles],
                title="Feedback gain K0(z)", x_label="z [m]", y_label="K0 [1/m]",
            )
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written
