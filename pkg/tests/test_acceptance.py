"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Closed-loop runs are shared through the session cache in ``conftest``.
"""

import math

import numpy as np
import pytest
from conftest import benchmark_run

from fracbackstep.foabc import FOTD
from fracbackstep.fraccalc import (
    TimeGrid,
    caputo_diff,
    check_additivity,
    default_diffusive,
    diffusive_step,
    gl_integrate,
    mittag_leffler,
    solve_fos,
)
from fracbackstep.harness import compute_metrics, example_case, export_csv, load_csv, run_scenario, with_horizon
from fracbackstep.nonsmooth import actuate, dead_zone, dead_zone_disturbance, saturate
from fracbackstep.plant import example_plant

ACT = example_plant()[1]

# published benchmark values: (eps_max, eps_l2, u_l2) per example and case
ANCHORS = {
    (1, 1): (0.73965, 18.084, 67.604),
    (1, 2): (0.78887, 19.639, 64.233),
    (1, 3): (0.78892, 23.036, 67.396),
    (2, 1): (0.74547, 39.939, 227.30),
    (2, 2): (0.78489, 43.165, 225.35),
    (2, 3): (0.77238, 55.456, 230.88),
}

# generous fixed caps for "all logged signals bounded"
CAPS = {"x": 10.0, "theta_hat": 100.0, "D_hat": 100.0, "lam": 1e3, "v": 1e4, "p_hat": 100.0}


def within_factor(value, anchor, factor=2.0):
    return anchor / factor <= value <= anchor * factor


def tail_error(rec, start=15.0):
    return float(np.max(np.abs(rec.eps[rec.t >= start - 1e-9])))


def bounded(rec):
    worst = {}
    for name, cap in CAPS.items():
        arr = getattr(rec, name)
        if arr is None:
            continue
        worst[name] = float(np.max(np.abs(arr)))
        if not (np.all(np.isfinite(arr)) and worst[name] < cap):
            return False, worst
    return True, worst


def u_in_limits(rec):
    return bool(np.all((rec.u >= ACT.U_low) & (rec.u <= ACT.U_up)))


def test_criterion_01_solver_oracle(report_line):
    grid = TimeGrid.over(5.0, 1e-3)
    y = solve_fos(lambda t, x: -x, [0.5], [1.0], grid)[:, 0]
    exact = mittag_leffler(0.5, -np.sqrt(grid.times))
    mask = np.abs(exact) > 1e-2
    rel = float(np.max(np.abs(y[mask] - exact[mask]) / np.abs(exact[mask])))
    ok = rel <= 1e-3
    report_line(1, ok, f"max rel error vs Mittag-Leffler = {rel:.3e} (tol 1e-3)")
    assert ok


def test_criterion_02_caputo_identities(report_line):
    h = 1e-3
    t = np.arange(1001) * h
    worst_const, worst_rel = 0.0, 0.0
    for a in (0.3, 0.5, 0.7):
        worst_const = max(worst_const, float(np.max(np.abs(caputo_diff(np.full(t.size, -2.5), a, h)))))
        d1 = caputo_diff(t, a, h)[-1]
        d2 = caputo_diff(t**2, a, h)[-1]
        e1, e2 = 1 / math.gamma(2 - a), 2 / math.gamma(3 - a)
        worst_rel = max(worst_rel, abs(d1 - e1) / e1, abs(d2 - e2) / e2)
    ok = worst_const < 1e-12 and worst_rel <= 1e-2
    report_line(2, ok, f"constant {worst_const:.1e} (tol 1e-12), powers rel {worst_rel:.2e} (tol 1e-2)")
    assert ok


def test_criterion_03_additivity(report_line):
    grid = TimeGrid.over(2.0, 1e-3)
    t = grid.times
    devs = [check_additivity(p, q, f, grid) for f in (t, t**2) for p, q in ((0.25, 0.25), (0.3, 0.4))]
    ok = max(devs) < 5e-2
    report_line(3, ok, f"max deviation {max(devs):.3e} (tol 5e-2)")
    assert ok


def test_criterion_04_diffusive_vs_gl(report_line):
    h = 1e-3
    f = np.sin(np.arange(10_001) * h)
    approx = default_diffusive(0.7, n_nodes=60)
    out = np.zeros(f.size)
    for k in range(1, f.size):
        out[k] = diffusive_step(approx, f[k - 1], h)[1]
    dev = float(np.max(np.abs(out - gl_integrate(f, 0.7, h))))
    ok = dev < 5e-2
    report_line(4, ok, f"max |diffusive - GL| = {dev:.3e} (tol 5e-2)")
    assert ok


def test_criterion_05_nonsmooth(report_line):
    v = np.concatenate([np.linspace(-10, 10, 100_000), ACT.breakpoints])
    w = saturate(v, ACT)
    u = actuate(v, ACT)
    comp = int(np.count_nonzero(u != dead_zone(w, ACT)))
    lin = int(np.count_nonzero(dead_zone(w, ACT) != ACT.m * w + dead_zone_disturbance(w, ACT)))
    dmax = float(np.max(np.abs(dead_zone_disturbance(v, ACT))))
    ok = comp == 0 and lin == 0 and dmax <= 0.8 and u.min() >= -1.5 and u.max() <= 1.8
    report_line(5, ok, f"mismatches {comp}/{lin}, max|d''| {dmax}, u range [{u.min()}, {u.max()}]")
    assert ok


def _fotd_mean_error(r1):
    f = FOTD(0.5, r1=r1, r2=5)
    h = 1e-3
    errs = []
    for k in range(20_001):
        t = k * h
        if t >= 10:
            errs.append(abs(f.x1 - math.sin(2 * t)))
        f.step(math.sin(2 * t), h)
    return float(np.mean(errs))


def test_criterion_06_fotd(report_line):
    errs = [_fotd_mean_error(r1) for r1 in (10, 50, 200)]
    f = FOTD(1.0, r1=50, r2=5)
    for k in range(10_001):
        f.step(k * 1e-3, 1e-3)
    ok = errs[0] > errs[1] > errs[2] and abs(f.derivative - 1) <= 0.05
    report_line(6, ok, f"mean |x1-v| over r1=10/50/200: {errs[0]:.4f} > {errs[1]:.4f} > {errs[2]:.4f}; "
                f"ramp derivative {f.derivative:.4f}")
    assert ok


def _closed_loop_checks(rec, met, tail_tol):
    problems = []
    tail = tail_error(rec)
    if tail >= tail_tol:
        problems.append(f"tail |eps| {tail:.4f} >= {tail_tol}")
    ok_b, worst = bounded(rec)
    if not ok_b:
        problems.append(f"unbounded signal {worst}")
    if not u_in_limits(rec):
        problems.append("u outside actuator limits")
    if rec.t[-1] < 20 - 1e-9:
        problems.append("horizon not reached")
    return problems, tail


def test_criterion_07_example1_thm1(report_line):
    rec, met = benchmark_run(1, 1)
    problems, tail = _closed_loop_checks(rec, met, 0.05)
    a_eps, _, a_u = ANCHORS[(1, 1)]
    if not within_factor(met.eps_max, a_eps):
        problems.append(f"eps_max {met.eps_max:.4f} not within x2 of {a_eps}")
    if not within_factor(met.u_l2, a_u):
        problems.append(f"u_l2 {met.u_l2:.3f} not within x2 of {a_u}")
    detail = f"tail |eps| {tail:.4f}, eps_max {met.eps_max:.4f} (anchor {a_eps}), u_l2 {met.u_l2:.3f} (anchor {a_u})"
    report_line(7, not problems, detail + ("; " + "; ".join(problems) if problems else ""))
    assert not problems


def test_criterion_08_example1_cor1(report_line):
    rec, met = benchmark_run(1, 2)
    problems, tail = _closed_loop_checks(rec, met, 0.05)
    loose, loose_met = benchmark_run(1, 2, c=(4.0, 0.8, 4.0))
    ok_b, _ = bounded(loose)
    if not ok_b or not np.all(np.isfinite(loose.x)):
        problems.append("c=(4, 0.8, 4) run not bounded")
    detail = (f"tail |eps| {tail:.4f}, eps_max {met.eps_max:.4f}; "
              f"c=(4,0.8,4): finite, tail |eps| {tail_error(loose):.4f}")
    report_line(8, not problems, detail + ("; " + "; ".join(problems) if problems else ""))
    assert not problems


def test_criterion_09_example2(report_line):
    problems, parts = [], []
    for case in (1, 2):
        rec, met = benchmark_run(2, case)
        label = rec.variant
        sub, tail = _closed_loop_checks(rec, met, 0.1)
        problems += [f"{label}: {p}" for p in sub]
        if rec.p_floor_hits:
            problems.append(f"{label}: p_hat floor hit {rec.p_floor_hits} times")
        a_eps, _, a_u = ANCHORS[(2, case)]
        if not within_factor(met.eps_max, a_eps):
            problems.append(f"{label}: eps_max {met.eps_max:.4f} not within x2 of {a_eps}")
        if not within_factor(met.u_l2, a_u):
            problems.append(f"{label}: u_l2 {met.u_l2:.3f} not within x2 of {a_u}")
        parts.append(f"{label} tail {tail:.4f} eps_max {met.eps_max:.4f} u_l2 {met.u_l2:.2f} floor hits {rec.p_floor_hits}")
    report_line(9, not problems, "; ".join(parts) + ("; FAILED: " + "; ".join(problems) if problems else ""))
    assert not problems


def test_criterion_10_ordering(report_line):
    problems, parts = [], []
    for ex in (1, 2):
        l2 = [benchmark_run(ex, case)[1].eps_l2 for case in (1, 2, 3)]
        parts.append(f"example {ex}: {l2[0]:.3f} / {l2[1]:.3f} / {l2[2]:.3f}")
        if not (l2[0] < l2[1] < l2[2]):
            problems.append(f"example {ex} ordering violated")
    report_line(10, not problems, "eps_l2 thm / cor / baseline, " + "; ".join(parts)
                + ("; " + "; ".join(problems) if problems else ""))
    assert not problems


def test_criterion_11_determinism(report_line, tmp_path):
    cfg = with_horizon(example_case(2, 2), 2.0)
    a, met_a = run_scenario(cfg)
    b, _ = run_scenario(cfg)
    export_csv(a, tmp_path / "a.csv")
    export_csv(b, tmp_path / "b.csv")
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rec, met = benchmark_run(1, 1)
    export_csv(rec, tmp_path / "full.csv")
    again = compute_metrics(load_csv(tmp_path / "full.csv", rec.truth, h=rec.h))
    again_short = compute_metrics(load_csv(tmp_path / "a.csv", a.truth, h=a.h))
    ok = same and again == met and again_short == met_a
    report_line(11, ok, f"CSV byte-identical: {same}; metrics from CSV equal report: {again == met and again_short == met_a}")
    assert ok
