"""Acceptance suite: ten criteria, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import statistics
import sys
import time
from pathlib import Path

if __package__ in (None, ""):  # run as a script
    sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from battmon import harness
from battmon.battery import BatteryParams, discrete_step, jacobian, process_model
from battmon.core import StateVector
from battmon.estimators import EstimatorConfig, LinearModel, gauss_hermite_rule, make_estimator
from battmon.metrics import rmse
from tests.conftest import ACCEPTANCE_LINES, linear_run
from tests.oracles import LinearSystem, gaussian_moment, integrate_continuous, reference_kf

SEEDS = range(5)


def report(n, title, ok, detail):
    ACCEPTANCE_LINES[n] = f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}"
    print(ACCEPTANCE_LINES[n])
    return ok


@functools.lru_cache(maxsize=None)
def benchmark(seed):
    """Default config at ``seed``: (RunResult, wall seconds for the whole run)."""
    raw = harness.load_config()
    raw["scenario"]["seed"] = seed
    cfg = harness.HarnessConfig.from_dict(raw)
    t0 = time.perf_counter()
    (rr,) = harness.run_benchmark(cfg)
    return rr, time.perf_counter() - t0


def voltage_rmse(table, f):
    return table.key_value(f, "voltage")


# --- 1 -----------------------------------------------------------------------


def criterion_1():
    p = BatteryParams(0.01, 0.015, 0.005, 10.0, 1.0, 0.01)
    res = p.resistances
    rng = np.random.default_rng(2024)
    states = np.c_[rng.uniform(2.5, 4.5, (1000, 2)), rng.uniform(0.005, 2.0, (1000, 2))]
    currents = rng.uniform(-60, 60, 1000)
    t0 = time.perf_counter()
    worst = 0.0
    for x, i_s in zip(states, currents):
        jac = jacobian(StateVector.from_array(x), i_s, res, p.t_s)
        fd = np.empty((4, 4))
        for j in range(4):
            h = 1e-6 * (1 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (
                process_model(StateVector.from_array(xp), i_s, res, p.t_s).as_array()
                - process_model(StateVector.from_array(xm), i_s, res, p.t_s).as_array()
            ) / (2 * h)
        # relative entrywise; exact zeros of the Jacobian must be reproduced to round-off
        rel = np.abs(jac - fd) / np.maximum(np.abs(jac), 1e-8)
        worst = max(worst, rel.max())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 1.0
    return report(1, "Jacobian vs finite differences", ok,
                  f"max relative gap {worst:.2e} on 1000 states in {elapsed:.2f} s")


# --- 2 -----------------------------------------------------------------------


def criterion_2(stride=20):
    cfg = harness.HarnessConfig.from_dict(harness.load_config())
    s = cfg.case_scenario("noise_only")
    truth = harness.simulate_truth(s)
    base = s.true_params
    gaps = {}
    for t_s in (base.t_s, base.t_s / 2):
        g = []
        for k in range(0, len(truth), stride):
            p = BatteryParams(base.r_e, base.r_c, base.r_t, truth.c_b[k], truth.c_c[k], t_s)
            v = (truth.v_cb[k], truth.v_cc[k])
            i_s = truth.i_s[k]
            _, ref = integrate_continuous(p, v, lambda t: i_s, (0.0, t_s))
            g.append(np.max(np.abs(np.array(discrete_step(p, v, i_s)) - ref[-1])))
        gaps[t_s] = np.sqrt(np.mean(np.square(g)))
    ratio = gaps[base.t_s] / gaps[base.t_s / 2]
    return report(2, "Euler step vs RK4 oracle", 3.5 <= ratio <= 4.5,
                  f"RMS per-step gap {gaps[base.t_s]:.3e} -> {gaps[base.t_s / 2]:.3e}, "
                  f"ratio {ratio:.3f} over {len(range(0, len(truth), stride))} states")


# --- 3 -----------------------------------------------------------------------


def _linear_system():
    a = np.array([
        [0.95, 0.04, 0.01, 0.0],
        [0.02, 0.90, 0.0, 0.03],
        [0.0, 0.0, 0.99, 0.01],
        [0.01, 0.0, -0.02, 0.97],
    ])
    return LinearSystem(a, np.array([[0.1], [0.0], [0.02], [0.05]]),
                        np.hstack([np.eye(2), np.zeros((2, 2))]), 0.01 * np.eye(4),
                        np.diag([0.2, 0.1]))


def _max_gap(variant, sys, us, zs, xs, ps):
    model = LinearModel(sys.a, sys.b, sys.c)
    f = make_estimator(EstimatorConfig(variant, np.zeros(4), np.eye(4), sys.q, sys.r), model)
    gap = 0.0
    for u, z, x, p in zip(us, zs, xs, ps):
        e = f.step(z, u)
        gap = max(gap, np.abs(e.x - x).max(), np.abs(e.cov - p).max())
    return gap


def _pf_vs_kf(seed, n_steps=500, particles=10_000):
    a, q, r = 0.9, 0.5, 1.0
    rng = np.random.default_rng(100 + seed)
    x, us, zs = 0.0, [None], []
    for k in range(n_steps):
        if k:
            u = np.sin(0.1 * k)
            x = a * x + u + math.sqrt(q) * rng.standard_normal()
            us.append(u)
        zs.append([x + math.sqrt(r) * rng.standard_normal()])
    xs, ps = reference_kf(LinearSystem([[a]], [[1.0]], [[1.0]], [[q]], [[r]]), [0.0], [[1.0]],
                          us, zs)
    f = make_estimator(
        EstimatorConfig("PF", [0.0], [[1.0]], [[q]], [[r]], pf_particle_count=particles,
                        seed=seed),
        LinearModel([[a]], [1.0], [[1.0]]),
    )
    return float(np.mean([abs(f.step(z, u).x[0] - m[0]) / math.sqrt(p[0, 0])
                          for u, z, m, p in zip(us, zs, xs, ps)]))


def criterion_3():
    sys = _linear_system()
    us, zs = linear_run(sys, 100, seed=1)
    xs, ps = reference_kf(sys, np.zeros(4), np.eye(4), us, zs)
    ekf = _max_gap("EKF", sys, us, zs, xs, ps)
    qkf = _max_gap("QKF", sys, us, zs, xs, ps)
    pf = [_pf_vs_kf(seed) for seed in range(3)]
    ok = ekf <= 1e-10 and qkf <= 1e-8 and all(g <= 0.10 for g in pf)
    return report(3, "filter cross-checks", ok,
                  f"EKF gap {ekf:.1e}, QKF gap {qkf:.1e}, PF mean gap / KF std "
                  + ", ".join(f"{g:.3f}" for g in pf))


# --- 4 -----------------------------------------------------------------------


def criterion_4():
    r1 = gauss_hermite_rule(3, 1)
    err = max(abs(r1.weights @ r1.points[:, 0] ** p - gaussian_moment(p)) for p in range(6))
    n4 = len(gauss_hermite_rule(3, 4))
    return report(4, "Gauss-Hermite rule", err <= 1e-12 and n4 == 81,
                  f"monomial error {err:.1e} for x^0..x^5, {n4} points for d=4")


# --- 5, 6, 8 -----------------------------------------------------------------


def criterion_5():
    orders, slow = [], 0.0
    for seed in SEEDS:
        rr, wall = benchmark(seed)
        orders.append(rr.ranking.orders["noise_only"])
        slow = max(slow, wall)
    hits = sum(o == ["EKF", "SVSF", "QKF", "PF"] for o in orders)
    ok = hits >= 4 and slow < 60.0
    return report(5, "noise-only ordering EKF <= SVSF <= QKF <= PF", ok,
                  f"{hits}/5 seeds, slowest full run {slow:.1f} s")


def criterion_6():
    hits, detail = 0, []
    for seed in SEEDS:
        t = benchmark(seed)[0].cases["with_model_error"].table
        v = {f: voltage_rmse(t, f) for f in t.filters}
        svsf_best = all(v["SVSF"] < v[f] for f in v if f != "SVSF")
        ekf_bad = t.diverged["EKF"] or v["EKF"] == max(v.values())
        hits += svsf_best and ekf_bad
        detail.append("EKF diverged" if t.diverged["EKF"] else "EKF finite")
    return report(6, "model-error case: SVSF best, EKF unstable", hits >= 4,
                  f"{hits}/5 seeds ({', '.join(sorted(set(detail)))})")


def criterion_7():
    # median over the five benchmark seeds of the noise-only wall time per filter
    times = {f: statistics.median(benchmark(s)[0].cases["noise_only"].table.wall_time[f]
                                  for s in SEEDS)
             for f in ("EKF", "PF", "QKF", "SVSF")}
    ok = (max(times["EKF"], times["SVSF"]) < times["PF"] < times["QKF"]
          and max(times["EKF"], times["SVSF"]) <= 2 * min(times["EKF"], times["SVSF"]))
    return report(7, "timing max(EKF, SVSF) < PF < QKF", ok,
                  ", ".join(f"{f} {t:.2f} s" for f, t in times.items()))


def criterion_8():
    worst = 0.0
    for seed in SEEDS:
        cr = benchmark(seed)[0].cases["with_model_error"]
        tr, x = cr.truth, cr.traces["SVSF"].x
        err = np.abs(np.c_[x[:, 0] - tr.v_cb, x[:, 1] - tr.v_cc])
        settled = err[tr.t >= 1.0]
        # steady-state magnitude: RMS error over the second half of the run
        steady = np.sqrt(np.mean(err[tr.t >= tr.t[-1] / 2] ** 2, axis=0))
        worst = max(worst, float((settled.max(axis=0) / steady).max()))
    return report(8, "SVSF errors bounded under model error", worst <= 10.0,
                  f"peak error after 1 s is at most {worst:.2f}x steady-state RMS (limit 10x)")


# --- 9 -----------------------------------------------------------------------


def criterion_9():
    ok = rmse(np.full(4, 2.0), np.zeros(4)) == 1.0
    ok &= rmse(np.full(4, 2.0), np.zeros(4), conventional=True) == 2.0
    ok &= all(rmse([e], [0.0]) == rmse([e], [0.0], conventional=True) == abs(e)
              for e in (-1.5, 0.3, 7.0))
    rng = np.random.default_rng(9)
    worst = 0.0
    for n in (1, 2, 10, 6000):
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        worst = max(worst, abs(rmse(a, b, conventional=True) / rmse(a, b) - math.sqrt(n))
                    / math.sqrt(n))
    ok &= worst < 1e-14
    return report(9, "RMSE formulas", bool(ok),
                  f"analytic cases exact; conventional/default = sqrt(N) to {worst:.1e} relative")


# --- 10 ----------------------------------------------------------------------


def criterion_10(tmp_root):
    cfg = harness.HarnessConfig.from_dict(harness.load_config())
    first, second = tmp_root / "first", tmp_root / "second"
    # timing cells are wall-clock measurements, so they are left out of the comparison
    harness.export_all([benchmark(0)[0]], first, timing=False)
    harness.export_all(harness.run_benchmark(cfg), second, timing=False)
    names = sorted(p.name for p in first.iterdir())
    same = [n for n in names if (first / n).read_bytes() == (second / n).read_bytes()]
    ok = len(same) == len(names) and len(names) == 12
    return report(10, "deterministic exports", ok, f"{len(same)}/{len(names)} files byte-identical")


# --- pytest entry points ---------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4, 9])
def test_fast_criteria(n):
    assert globals()[f"criterion_{n}"]()


@pytest.mark.slow
@pytest.mark.parametrize("n", [5, 6, 7, 8])
def test_benchmark_criteria(n):
    assert globals()[f"criterion_{n}"]()


@pytest.mark.slow
def test_criterion_10(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import tempfile

    results = [globals()[f"criterion_{n}"]() for n in range(1, 10)]
    with tempfile.TemporaryDirectory() as d:
        results.append(criterion_10(Path(d)))
    print(f"{sum(results)}/10 criteria pass")
    sys.exit(0 if all(results) else 1)
