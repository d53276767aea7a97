import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from galerkin_vi.analysis import (ConvergenceReport, StudyConfig, curve_error_study, energy_drift_study, fit_order,
                                  forced_order_study, lagrangian_error_study, mesh_error_study, select_rows)
from galerkin_vi.analysis.config import parse_config_text, parse_params
from galerkin_vi.analysis.report import csv_text, emit_report, svg_text
from galerkin_vi.errors import InsufficientData, IoFailure, ZeroError

HS = [0.2, 0.1, 0.05, 0.025, 0.0125]


def test_fit_order_examples():
    slope, resid = fit_order([(h, h ** 2) for h in HS])
    assert slope == pytest.approx(2, abs=1e-12) and resid < 1e-12
    slope, _ = fit_order([(h, 3 * h ** 4) for h in HS])
    assert slope == pytest.approx(4, abs=1e-12)


def test_fit_order_floor_rule():
    rows = [(h, h ** 4) for h in HS[:4]] + [(HS[4], 1e-14)]
    floors = [1e-15] * 5
    slope, resid = fit_order(rows, floors)
    assert slope == pytest.approx(4, abs=1e-12) and resid < 1e-12
    kept, excluded = select_rows(rows, floors)
    assert excluded == [(HS[4], 1e-14)] and len(kept) == 4


def test_fit_order_errors():
    with pytest.raises(InsufficientData):
        fit_order([(0.1, 1e-3), (0.05, 2e-4)])
    with pytest.raises(ZeroError):
        fit_order([(h, 0.0) for h in HS])
    with pytest.raises(InsufficientData):
        fit_order([(h, h ** 2) for h in HS], floors=[0, 0, 1, 1, 1])


@settings(max_examples=60, deadline=None)
@given(order=st.floats(0.5, 8), const=st.floats(1e-3, 1e3), n=st.integers(3, 8))
def test_fit_order_recovers_power_laws(order, const, n):
    hs = [0.5 * 2.0 ** -k for k in range(n)]
    slope, resid = fit_order([(h, const * h ** order) for h in hs])
    assert abs(slope - order) <= 1e-9 and resid <= 1e-9


def test_report_container():
    rep = ConvergenceReport("demo", HS)
    rep.add("a", [h ** 2 for h in HS], [0] * 5, 2, 0.25)
    rep.add("b", [h for h in HS], [0] * 5, 3, 0.25)
    rep.add("c", [h for h in HS], [0] * 5, 3, 0.25, informational=True)
    rep.add("d", [h ** 3 for h in HS], [0] * 5, 2, 0.25, mode="at_least")
    assert rep.metrics["a"].passed and not rep.metrics["b"].passed and rep.metrics["d"].passed
    assert not rep.passed
    del rep.metrics["b"]
    assert rep.passed
    assert rep.expected_order == {"a": 2, "c": 3, "d": 2}
    assert rep.rows[0] == (0.2, {"a": 0.2 ** 2, "c": 0.2, "d": 0.2 ** 3})
    assert "DEVIATION" not in rep.summary()
    bad = ConvergenceReport("tiny", HS[:2])
    m = bad.add("x", [1e-2, 1e-3], [0, 0], 2, 0.2)
    assert not m.passed and "at least 3" in m.note


def test_study_config_validation():
    with pytest.raises(ValueError):
        StudyConfig(h_values=(0.1, 0.2))
    with pytest.raises(ValueError):
        StudyConfig(h_values=(0.3,), t_end=1.0)
    with pytest.raises(ValueError):
        StudyConfig(metrics=("bogus",))
    with pytest.raises(ValueError):
        StudyConfig(q0=(1.0, 2.0), p0=(0.0,))
    cfg = StudyConfig(h_values=(0.1, 0.01), t_end=1.0)
    assert cfg.steps_for(0.01) == 100
    with pytest.raises(ValueError):
        mesh_error_study(StudyConfig(system="kepler"))


def test_mesh_study_small():
    rep = mesh_error_study(StudyConfig(degree=2, quadrature="gauss:2", metrics=("mesh", "lagrangian")))
    assert rep.metrics["mesh"].passed and rep.metrics["lagrangian"].passed
    assert rep.metrics["mesh"].expected == 4 and rep.metrics["lagrangian"].expected == 5


def test_lagrangian_study_shooting_oracle():
    cfg = StudyConfig(system="pendulum", degree=1, quadrature="gauss:1", h_values=(0.2, 0.1, 0.05, 0.025))
    rep = lagrangian_error_study(cfg)
    m = rep.metrics["lagrangian"]
    assert m.note == "shooting oracle" and abs(m.slope - 3) <= 0.3


def test_curve_study_metrics():
    rep = curve_error_study(StudyConfig(degree=2, quadrature="lobatto:2"))
    assert set(rep.metrics) == {"curve", "curve_local", "curve_velocity", "mesh"}
    assert rep.metrics["curve_local"].expected == 2
    assert rep.metrics["curve_velocity"].informational
    with pytest.raises(ValueError):
        curve_error_study(StudyConfig(dense=8))


def test_energy_study_exact_cases():
    free = energy_drift_study(StudyConfig(system="free_particle"), h=0.1, steps=200)
    assert np.max(np.abs(free.deviation)) <= 1e-12
    mid = energy_drift_study(StudyConfig(degree=1, quadrature="gauss:1"), h=0.1, steps=500)
    assert np.max(np.abs(mid.deviation)) <= 1e-12 and mid.passed
    assert mid.rows[0] == (0, 0.0)
    with pytest.raises(ValueError):
        energy_drift_study(StudyConfig(system="damped_oscillator"))


def test_forced_study_reduces_to_mesh_study():
    cfg = StudyConfig(degree=2, quadrature="gauss:2")
    forced = forced_order_study(cfg)
    mesh = mesh_error_study(cfg)
    assert forced.metrics["forced"].slope == pytest.approx(mesh.metrics["mesh"].slope, abs=1e-6)
    assert any("no force" in n for n in forced.notes)
    damped = forced_order_study(StudyConfig(system="damped_oscillator", degree=1, quadrature="gauss:1"))
    assert any("provable order 1" in n for n in damped.notes)


def _report():
    rep = ConvergenceReport("demo <s=2>", HS[:4])
    rep.add("mesh", [h ** 4 for h in HS[:4]], [0] * 4, 4, 0.25)
    rep.add("curve", [h ** 3 for h in HS[:3]] + [1e-30], [0, 0, 0, 1e-20], 3, 0.35)
    rep.add("energy", [float("nan")] * 4, [0] * 4, 2, 0.25)
    return rep


def test_csv_output(tmp_path):
    path = emit_report(_report(), "csv", tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "h,mesh,curve"
    data = [ln for ln in lines[1:] if not ln.startswith("#")]
    assert len(data) == 4
    assert float(data[1].split(",")[1]) == pytest.approx(0.1 ** 4)
    footer = [ln for ln in lines if ln.startswith("#")]
    assert "# slope mesh = 4.0000 (expected 4)" in footer
    assert any(ln.startswith("# excluded curve h = 0.025") for ln in footer)
    assert "# omitted energy: no data" in footer


def test_svg_output(tmp_path):
    rep = _report()
    text = emit_report(rep, "svg", tmp_path / "sub" / "r.svg").read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    for name in ("mesh", "curve"):
        assert len(re.findall(rf'class="guide" data-metric="{name}"', text)) == 1
        assert len(re.findall(rf'class="fit" data-metric="{name}"', text)) == 1
    assert 'data-metric="energy"' not in text
    assert "&lt;s=2&gt;" in text
    assert text.count('fill="none" stroke="#d62728"') == 1  # excluded row drawn hollow
    assert svg_text(rep) == text


def test_emit_errors(tmp_path):
    with pytest.raises(IoFailure):
        emit_report(_report(), "csv", tmp_path)
    with pytest.raises(ValueError):
        emit_report(_report(), "png", tmp_path / "x.png")
    with pytest.raises(ValueError):
        emit_report(ConvergenceReport("empty", HS), "csv", tmp_path / "e.csv")
    assert csv_text(_report()).endswith("\n")


def test_config_parsing():
    text = """
    # sweep for the pendulum
    system = pendulum
    param.g = 2.5
    params = length=2, m=1
    degree = 3
    quadrature = gauss:3    # matching Gauss rule
    h_values = 0.2, 0.1 0.05
    q0 = 1.0
    metrics = mesh, lagrangian
    t_end = 1
    """
    values = parse_config_text(text)
    assert values["system"] == "pendulum"
    assert values["params"] == {"g": 2.5, "length": 2, "m": 1}
    assert values["degree"] == 3 and values["quadrature"] == "gauss:3"
    assert values["h_values"] == (0.2, 0.1, 0.05)
    assert values["metrics"] == ("mesh", "lagrangian")
    cfg = StudyConfig(**values)
    assert cfg.make_system().params["g"] == 2.5
    with pytest.raises(ValueError):
        parse_config_text("colour = blue")
    with pytest.raises(ValueError):
        parse_params(["k"])
