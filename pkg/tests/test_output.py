"""Artifact writers: wide CSV, deterministic JSON, and self-contained SVG."""

import json

import numpy as np
import pytest

from lwrvsl import (
    reference_scenario,
    run_simulation,
    to_absolute,
    write_riccati_artifacts,
    write_run_artifacts,
)
from lwrvsl import output as output_module
from lwrvsl.output import (
    PALETTE,
    fmt_float,
    run_summary,
    svg_heatmap,
    svg_lineplot,
    write_json,
    write_total_cars_csv,
    write_wide_csv,
)


@pytest.fixture(scope="module")
def linear_run():
    scenario = reference_scenario(model="linear", n_cells=16, sim_time=4.0)
    return scenario, run_simulation(scenario, frame_interval=1.0)


@pytest.fixture(scope="module")
def nonlinear_run():
    scenario = reference_scenario(model="nonlinear", n_cells=16, sim_time=4.0)
    return scenario, run_simulation(scenario, frame_interval=1.0)


class TestFloatFormatting:
    def test_round_trips_doubles_exactly(self):
        for value in (0.1, 1.0 / 3.0, 115.0 / 3.6, 1e-17, -2.5e300):
            assert float(fmt_float(value)) == value

    def test_integral_values_stay_short(self):
        assert fmt_float(120.0) == "120"
        assert fmt_float(0.0) == "0"


class TestPalette:
    def test_shape_and_format(self):
        assert len(PALETTE) == 64
        assert all(
            c.startswith("#") and len(c) == 7 and set(c[1:]) <= set("0123456789abcdef")
            for c in PALETTE
        )

    def test_anchors(self):
        assert PALETTE[0] == "#440154"
        assert PALETTE[-1] == "#fde725"


class TestCsvWriters:
    def test_wide_csv_layout_and_round_trip(self, tmp_path):
        path = tmp_path / "m.csv"
        positions = np.array([0.0, 12.5])
        times = np.array([0.0, 0.5])
        matrix = np.array([[1.0 / 3.0, 2.0 / 7.0], [50.1234, 0.0]])
        write_wide_csv(path, "t_s/value", "z_m=", positions, times, matrix)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_s/value,z_m=0,z_m=12.5"
        assert len(lines) == 3
        parsed = np.array(
            [[float(cell) for cell in line.split(",")[1:]] for line in lines[1:]]
        )
        assert np.array_equal(parsed, matrix)
        assert [float(line.split(",")[0]) for line in lines[1:]] == [0.0, 0.5]

    def test_total_cars_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        write_total_cars_csv(path, np.array([0.0, 1.0]), np.array([100.0, 101.5]))
        lines = path.read_text().splitlines()
        assert lines == ["t_s,total_cars", "0,100", "1,101.5"]


class TestJsonWriter:
    def test_sorted_deterministic_output(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        payload = {"zeta": 1, "alpha": {"b": 2.5, "a": None}}
        write_json(a, payload)
        write_json(b, dict(reversed(payload.items())))
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text()
        assert text.endswith("}\n")
        assert text.index('"alpha"') < text.index('"zeta"')
        assert json.loads(text) == payload


class TestRunSummary:
    def test_linear_summary_fields(self, linear_run):
        scenario, history = linear_run
        summary = run_summary(scenario, history, 0.9, 1.0)
        assert summary["model"] == "linear"
        assert summary["control_enabled"] is True
        assert summary["q0"] == 5e-5
        assert summary["n_cells"] == 16
        assert summary["frames"] == 5
        assert summary["params"]["rho_max_per_km"] == pytest.approx(160.0, rel=1e-12)
        assert summary["params"]["u_max_kph"] == pytest.approx(115.0, rel=1e-12)
        assert summary["scenario"]["ic_amplitude_per_km"] == 10.0
        assert summary["target_cars"] == 100.0
        assert summary["initial_total_cars"] == history.total_cars_series[0]
        assert summary["final_total_cars"] == history.total_cars_series[-1]
        assert summary["min_density_per_km"] < summary["max_density_per_km"]
        assert "mass_balance" not in summary
        # 4 s is too short to regulate back to the 5% band
        assert summary["time_to_target_s"] is None or summary["time_to_target_s"] >= 0.0

    def test_nonlinear_summary_reports_mass_balance(self, nonlinear_run):
        scenario, history = nonlinear_run
        summary = run_summary(scenario, history, 0.9, 1.0)
        balance = summary["mass_balance"]
        assert balance["inflow_cars"] > 0.0
        assert balance["outflow_cars"] > 0.0
        assert balance["defect_relative"] < 1e-9

    def test_summary_is_json_serializable(self, linear_run, tmp_path):
        scenario, history = linear_run
        write_json(tmp_path / "s.json", run_summary(scenario, history, 0.9, 1.0))
        loaded = json.loads((tmp_path / "s.json").read_text())
        assert loaded["params"]["road_length_m"] == 2000.0


class TestSvgWriters:
    def test_heatmap_structure(self, tmp_path):
        path = tmp_path / "h.svg"
        times = np.linspace(0.0, 4.0, 5)
        positions = np.linspace(62.5, 1937.5, 16)
        matrix = np.outer(np.linspace(50.0, 55.0, 5), np.ones(16))
        svg_heatmap(path, times, positions, matrix, title="Density", value_label="cars/km")
        text = path.read_text()
        assert text.startswith("<?xml")
        assert "<svg xmlns=" in text
        assert text.endswith("</svg>\n")
        assert "Density" in text
        assert text.count("<rect") > 16

    def test_heatmap_constant_field(self, tmp_path):
        path = tmp_path / "c.svg"
        svg_heatmap(
            path,
            np.array([0.0, 1.0]),
            np.array([0.0, 1.0]),
            np.full((2, 2), 7.0),
            title="Flat",
            value_label="-",
        )
        assert "Flat" in path.read_text()

    def test_lineplot_structure(self, tmp_path):
        path = tmp_path / "l.svg"
        x = np.linspace(0.0, 2000.0, 21)
        series = [("q0=1e-06", np.linspace(1.0, 0.0, 21)), ("q0=0.0005", x / 2000.0)]
        svg_lineplot(path, x, series, title="Gain", x_label="z [m]", y_label="K0")
        text = path.read_text()
        assert text.startswith("<?xml")
        assert text.endswith("</svg>\n")
        assert text.count("<polyline") == 2
        assert "q0=1e-06" in text
        assert "q0=0.0005" in text
        assert "Gain" in text


class TestRunArtifacts:
    def test_full_format_set(self, linear_run, tmp_path):
        scenario, history = linear_run
        out = tmp_path / "run"
        written = write_run_artifacts(
            out, scenario, history, ("csv", "json", "svg"), 0.9, 1.0
        )
        names = sorted(p.name for p in written)
        assert names == [
            "control.csv",
            "density.csv",
            "density.svg",
            "speed.csv",
            "speed.svg",
            "summary.json",
            "total_cars.csv",
            "vsl.csv",
            "vsl.svg",
        ]
        assert all(p.exists() for p in written)

    def test_density_csv_contents(self, linear_run, tmp_path):
        scenario, history = linear_run
        written = write_run_artifacts(
            tmp_path / "run", scenario, history, ("csv",), 0.9, 1.0
        )
        density_path = next(p for p in written if p.name == "density.csv")
        lines = density_path.read_text().splitlines()
        assert lines[0].startswith("t_s/density_cars_per_km,z_m=62.5,z_m=187.5")
        assert len(lines) == 1 + len(history.times)
        first_row = [float(cell) for cell in lines[1].split(",")]
        assert first_row[0] == 0.0
        expected = to_absolute(history.density_frames[0], scenario.params).values * 1000.0
        assert np.array_equal(np.array(first_row[1:]), expected)

    def test_vsl_csv_covers_interfaces(self, linear_run, tmp_path):
        scenario, history = linear_run
        written = write_run_artifacts(
            tmp_path / "run", scenario, history, ("csv",), 0.9, 1.0
        )
        vsl_path = next(p for p in written if p.name == "vsl.csv")
        header = vsl_path.read_text().splitlines()[0]
        assert header.startswith("t_s/vsl_rate,z_m=0,")
        assert header.endswith("z_m=2000")
        assert len(header.split(",")) == 1 + 17

    def test_csv_only(self, linear_run, tmp_path):
        scenario, history = linear_run
        written = write_run_artifacts(
            tmp_path / "run", scenario, history, ("csv",), 0.9, 1.0
        )
        assert sorted(p.name for p in written) == [
            "control.csv",
            "density.csv",
            "speed.csv",
            "total_cars.csv",
            "vsl.csv",
        ]

    def test_partial_failure_removes_files(self, linear_run, tmp_path, monkeypatch):
        scenario, history = linear_run

        def boom(*args, **kwargs):
            raise RuntimeError("disk full")

        monkeypatch.setattr(output_module, "svg_heatmap", boom)
        out = tmp_path / "run"
        with pytest.raises(RuntimeError, match="disk full"):
            write_run_artifacts(out, scenario, history, ("csv", "svg"), 0.9, 1.0)
        assert list(out.iterdir()) == []


class TestRiccatiArtifacts:
    def test_csv_and_json(self, tmp_path):
        scenario = reference_scenario(n_cells=10)
        written = write_riccati_artifacts(
            tmp_path, scenario, [5e-5, 5e-4], ("csv", "json")
        )
        assert sorted(p.name for p in written) == [
            "riccati.csv",
            "riccati_summary.json",
        ]
        lines = (tmp_path / "riccati.csv").read_text().splitlines()
        assert lines[0] == (
            "z_m,phi[q0=5e-05],k0_per_m[q0=5e-05],phi[q0=0.0005],k0_per_m[q0=0.0005]"
        )
        assert len(lines) == 1 + 11
        last = lines[-1].split(",")
        assert float(last[0]) == 2000.0
        assert all(float(v) == 0.0 for v in last[1:])
        payload = json.loads((tmp_path / "riccati_summary.json").read_text())
        assert payload["q0_values"] == [5e-5, 5e-4]
        assert payload["road_length_m"] == 2000.0
        assert payload["phi_at_0"]["5e-05"] == pytest.approx(
            0.005542950940357987, rel=1e-13
        )
        assert payload["gain_at_0_per_m"]["0.0005"] == pytest.approx(
            0.022348386950996963, rel=1e-13
        )

    def test_svg_curves(self, tmp_path):
        scenario = reference_scenario(n_cells=10)
        written = write_riccati_artifacts(tmp_path, scenario, [1e-5], ("svg",))
        assert sorted(p.name for p in written) == [
            "riccati_gain.svg",
            "riccati_phi.svg",
        ]
        for path in written:
            assert path.read_text().endswith("</svg>\n")
