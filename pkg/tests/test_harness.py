import importlib
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from fracbackstep.foabc import ControllerConfig
from fracbackstep.harness import (
    ABSENT,
    ConfigError,
    GridSpec,
    ScenarioConfig,
    ScenarioDivergence,
    SimulationRecord,
    Truth,
    compute_metrics,
    config_from_dict,
    csv_columns,
    example_case,
    export_csv,
    load_config,
    load_csv,
    read_truth,
    run_scenario,
    run_table,
    with_horizon,
)
from fracbackstep.harness import table as table_mod
from fracbackstep.harness.cli import main

verify_mod = importlib.import_module("fracbackstep.harness.verify")


def _record(eps, u=None, n=1, q=1):
    eps = np.asarray(eps, dtype=float)
    N = eps.size
    return SimulationRecord(
        t=np.arange(N) * 0.1,
        x=np.zeros((N, n)),
        r=eps.copy(),
        eps=eps,
        v=np.zeros(N),
        w=np.zeros(N),
        u=np.zeros(N) if u is None else np.asarray(u, dtype=float),
        delta_w=np.zeros(N),
        lam=None,
        theta_hat=np.zeros((N, q)),
        D_hat=None,
        p_hat=None,
        truth=Truth(np.zeros(q), 1.0, 0.0),
        h=0.1,
    )


def test_metrics_constant_error():
    m = compute_metrics(_record(np.ones(400)))
    assert m.eps_max == 1.0
    assert m.eps_l2 == 20.0
    assert m.p_err_l2 is None and m.D_err_l2 is None


def test_metrics_single_sample():
    rec = _record([-0.7], u=[0.7])
    rec = replace(rec, theta_hat=np.array([[0.7]]), p_hat=np.array([1.7]), D_hat=np.array([0.7]))
    m = compute_metrics(rec)
    for val in (m.eps_max, m.eps_l2, m.theta_err_l2, m.u_l2, m.D_err_l2):
        assert val == pytest.approx(0.7)
    assert m.p_err_l2 == pytest.approx(0.7)


def test_metrics_empty_record_rejected():
    with pytest.raises(ValueError):
        compute_metrics(_record([]))


def test_csv_schema():
    assert csv_columns(3, 1) == (
        "t,x_1,x_2,x_3,y,r,eps,v,w,u,delta_w,lambda_1,lambda_2,lambda_3,theta_hat_1,D_hat,p_hat".split(",")
    )


def test_empty_record_is_header_only(tmp_path):
    rec = _record([], n=3)
    path = export_csv(rec, tmp_path / "empty.csv")
    assert path.read_text() == ",".join(csv_columns(3, 1)) + "\n"


def test_csv_write_error_names_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        export_csv(_record([0.0]), tmp_path / "missing" / "x.csv")


@pytest.fixture(scope="module")
def short_thm1():
    return run_scenario(with_horizon(example_case(1, 1), 1.0))


def test_thm1_csv_blanks_only_p_hat(tmp_path, short_thm1):
    rec, _ = short_thm1
    path = export_csv(rec, tmp_path / "run.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == len(rec) + 1 == 1002
    row = lines[1].split(",")
    assert row[-1] == "" and all(cell != "" for cell in row[:-1])


def test_metrics_recomputed_from_csv(tmp_path, short_thm1):
    rec, met = short_thm1
    export_csv(rec, tmp_path / "run.csv")
    again = compute_metrics(load_csv(tmp_path / "run.csv", rec.truth, h=rec.h))
    assert again == met


def test_determinism(tmp_path):
    cfg = with_horizon(example_case(2, 2), 0.5)
    a, _ = run_scenario(cfg)
    b, _ = run_scenario(cfg)
    export_csv(a, tmp_path / "a.csv")
    export_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_zero_scenario_stays_at_rest():
    cfg = config_from_dict(
        {
            "plant": "integrator-chain",
            "controller": {"variant": "thm1", "c": [4, 4, 4]},
            "grid": {"h": 1e-3, "horizon": 1.0},
            "x0": [0, 0, 0],
            "disturbance": False,
        }
    )
    rec, met = run_scenario(cfg)
    assert np.all(rec.eps == 0.0) and np.all(rec.v == 0.0)
    assert met.eps_max == 0.0


def test_example2_short_run_has_p_hat_and_no_floor_hits():
    rec, met = run_scenario(with_horizon(example_case(2, 1), 1.0))
    assert rec.p_hat is not None and rec.p_hat[0] == 0.01
    assert rec.p_floor_hits == 0
    assert met.p_err_l2 is not None
    assert rec.truth.p == pytest.approx(-1 / 6)
    assert rec.truth.D_bar == pytest.approx(8.8)


def test_controller_never_sees_truth(monkeypatch):
    seen = []
    import fracbackstep.harness.simulation as sim

    real = sim.Controller

    def spy(cfg, view, h, capacity):
        seen.append(view)
        return real(cfg, view, h, capacity)

    monkeypatch.setattr(sim, "Controller", spy)
    run_scenario(with_horizon(example_case(2, 1), 0.01))
    run_scenario(with_horizon(example_case(1, 1), 0.01))
    blind, sighted = seen
    for view in seen:
        for name in ("theta_true", "disturbance", "disturbance_bound_bar", "plant"):
            assert not hasattr(view, name)
    assert blind.b_bar is None and blind.sign_b_bar == -1.0
    assert sighted.b_bar == -6.0


def test_divergence_reported_with_last_good(monkeypatch):
    import fracbackstep.harness.simulation as sim

    calls = {"n": 0}
    real = sim.plant_rhs

    def flaky(*args):
        calls["n"] += 1
        if calls["n"] > 5:
            raise FloatingPointError("psi_1 returned a non-finite value")
        return real(*args)

    monkeypatch.setattr(sim, "plant_rhs", flaky)
    with pytest.raises(ScenarioDivergence) as info:
        run_scenario(with_horizon(example_case(1, 1), 0.1))
    assert info.value.step == 6
    assert len(info.value.last_good) == 6


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="colour"):
        config_from_dict({"controller": {"variant": "thm1", "c": [4, 4, 4]}, "colour": 1})
    with pytest.raises(ConfigError, match="horizn"):
        config_from_dict({"controller": {"variant": "thm1", "c": [4, 4, 4]}, "grid": {"horizn": 3}})
    with pytest.raises(ConfigError, match="variant"):
        config_from_dict({"controller": {"c": [4, 4, 4]}})
    with pytest.raises(ConfigError):
        config_from_dict({"controller": {"variant": "thm1", "c": [4, 0.9, 4]}})
    with pytest.raises(ConfigError):
        config_from_dict({"plant": "nope", "controller": {"variant": "thm1", "c": [4, 4, 4]}})
    with pytest.raises(ConfigError):
        GridSpec(h=-1.0)


def test_load_yaml_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(
        "plant: example-4-1\n"
        "controller: {variant: cor2, c: [4, 4, 4], a: 4, sigma: 0.8, mu: 0.8}\n"
        "grid: {h: 0.001, horizon: 2}\n"
        "actuator: {m: 1.0, U_up: 1.8, U_low: -1.5, b_r: 0.8, b_l: -0.5}\n"
        "reference: {kind: sine, amplitude: 0.5, omega: 1.0}\n"
        "seed: 3\n"
    )
    cfg = load_config(path)
    assert cfg.controller.variant == "cor2" and not cfg.controller.known_b_bar
    assert cfg.grid.to_grid().n_steps == 2000
    assert cfg.reference.function()(math.pi / 2) == pytest.approx(0.5)


def test_run_table_structure():
    t1 = run_table(1, horizon=0.05)
    assert [r.variant for r in t1.rows] == ["thm1", "cor1", "baseline"]
    assert t1.columns == ["eps_max", "eps_l2", "theta_err_l2", "D_err_l2", "u_l2"]
    assert t1.rows[2].cells(t1.columns)[3] == ABSENT
    t2 = run_table(2, horizon=0.05)
    assert len(t2.columns) == 6 and "p_err_l2" in t2.columns
    assert t2.rows[2].cells(t2.columns)[t2.columns.index("D_err_l2")] == ABSENT
    assert "h=0.001" in t2.render() and ABSENT in t2.to_csv()


def test_run_table_reports_divergence_in_row(monkeypatch):
    real = table_mod.run_scenario

    def maybe_diverge(cfg):
        if cfg.controller.variant == "cor1":
            raise ScenarioDivergence(42, "plant state", last_good=None)
        return real(cfg)

    monkeypatch.setattr(table_mod, "run_scenario", maybe_diverge)
    t = run_table(1, horizon=0.02)
    assert not t.ok
    assert "diverged" in t.rows[1].cells(t.columns)[0]
    assert t.rows[0].metrics is not None and t.rows[2].metrics is not None


def test_verify_passes_and_catches_sign_mutation(monkeypatch):
    assert verify_mod.verify().ok
    from fracbackstep import fraccalc

    real = fraccalc._recurrence
    monkeypatch.setattr(fraccalc, "_recurrence", lambda a, n: -real(a, n))
    bad = verify_mod.verify(only={"caputo"})
    assert not bad.ok
    assert any(c.name.startswith("Caputo of t") and not c.passed for c in bad.checks)


def test_cli_verify_writes_only_report(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["verify_report.txt"]
    assert "checks passed" in capsys.readouterr().out


def test_cli_simulate(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("controller: {variant: thm1, c: [4, 4, 4]}\ngrid: {horizon: 0.2}\n")
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "out")]) == 0
    truth, metrics = read_truth(tmp_path / "out" / "metrics.json")
    rec = load_csv(tmp_path / "out" / "trajectory.csv", truth)
    assert compute_metrics(rec).as_dict() == metrics
    doc = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert doc["variant"] == "thm1"


def test_cli_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("controller: {variant: thm1, c: [4, 4, 4], gama: 2}\n")
    assert main(["simulate", str(cfg)]) == 2


def test_cli_table_short(tmp_path):
    assert main(["table", "--example", "1", "--horizon", "0.02", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "table_example1.csv").read_text().startswith("case,variant,eps_max")


def test_scenario_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(controller=None)
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(controller=ControllerConfig("thm1", c=[4, 4, 4]), x0=(0.0, 0.0)))


def test_shipped_configs_match_presets():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.yaml"))
    assert len(files) == 6
    for path in files:
        cfg = load_config(path)
        ex, case = int(path.stem[7]), {"thm1": 1, "thm2": 1, "cor1": 2, "cor2": 2, "baseline": 3}[cfg.controller.variant]
        ref = example_case(ex, case)
        assert cfg.controller.known_b_bar == ref.controller.known_b_bar
        assert cfg.grid == ref.grid and cfg.x0 == ref.x0
        for name in ("c", "a", "sigma", "mu"):
            np.testing.assert_array_equal(getattr(cfg.controller, name), getattr(ref.controller, name))
