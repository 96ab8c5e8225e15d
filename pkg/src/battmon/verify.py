"""Quick self-checks behind ``battmon verify``.

Each check is small (well under a second in total) and independent of the
benchmark config. The full oracle suite lives in the test tree.
"""

from __future__ import annotations

import math

import numpy as np

from .battery import (
    BatteryParams,
    continuous_derivatives,
    discrete_step,
    jacobian,
    output_voltage,
    process_model,
)
from .core import StateVector, cholesky_factor, make_rng, pseudo_inverse
from .estimators import (
    Estimate,
    LinearModel,
    ekf_predict,
    ekf_update,
    gauss_hermite_rule,
    pf_step,
    qkf_measurement_update,
    qkf_time_update,
    svsf_step,
)
from .estimators.pf import initial_particles
from .metrics import rmse

PARAMS = BatteryParams(r_e=0.01, r_c=0.015, r_t=0.005, c_b=40.0, c_c=4.0, t_s=0.01)


def _check_cholesky():
    rng = make_rng(1)
    worst = 0.0
    for _ in range(50):
        a = rng.standard_normal((4, 4))
        m = a @ a.T
        s = cholesky_factor(m)
        worst = max(worst, np.abs(s @ s.T - m).max() / np.abs(m).max())
    return worst < 1e-12, f"max relative reconstruction error {worst:.1e}"


def _check_quadrature():
    rule1 = gauss_hermite_rule(3, 1)
    moments = [1, 0, 1, 0, 3, 0]
    err = max(
        abs(rule1.weights @ rule1.points[:, 0] ** p - moments[p]) for p in range(6)
    )
    rule4 = gauss_hermite_rule(3, 4)
    ok = err < 1e-12 and len(rule4) == 81
    return ok, f"moment error {err:.1e}, {len(rule4)} points in 4-D"


def _check_jacobian():
    rng = make_rng(2)
    resist = PARAMS.resistances
    worst = 0.0
    for _ in range(100):
        x = np.array([
            rng.uniform(3, 4), rng.uniform(3, 4), rng.uniform(0.01, 1), rng.uniform(0.01, 1)
        ])
        i_s = rng.uniform(-50, 50)
        jac = jacobian(StateVector.from_array(x), i_s, resist, PARAMS.t_s)
        fd = np.empty((4, 4))
        for j in range(4):
            h = 1e-6 * (1 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd[:, j] = (
                process_model(StateVector.from_array(xp), i_s, resist, PARAMS.t_s).as_array()
                - process_model(StateVector.from_array(xm), i_s, resist, PARAMS.t_s).as_array()
            ) / (2 * h)
        worst = max(worst, np.abs(jac - fd).max() / max(1.0, np.abs(jac).max()))
    return worst < 1e-5, f"max finite-difference gap {worst:.1e}"


def _check_charge():
    v = (3.6, 3.9)
    q0 = PARAMS.c_b * v[0] + PARAMS.c_c * v[1]
    for _ in range(1000):
        v = discrete_step(PARAMS, v, 0.0)
    q1 = PARAMS.c_b * v[0] + PARAMS.c_c * v[1]
    d = continuous_derivatives(PARAMS, 3.6, 3.9, 0.0)
    flow = PARAMS.c_b * d[0] + PARAMS.c_c * d[1]
    ok = abs(q1 - q0) < 1e-10 * abs(q0) and abs(flow) < 1e-12
    return ok, f"charge drift {abs(q1 - q0):.1e} C over 1000 steps"


def _check_output():
    v = output_voltage(PARAMS, 3.7, 3.7, 0.0)
    return abs(v - 3.7) < 1e-15, f"open-circuit output {v!r} V"


def _check_linear_filters():
    a = np.array([[0.9, 0.1, 0, 0], [0.05, 0.9, 0, 0.02], [0, 0, 1, 0], [0.01, 0, 0, 0.95]])
    model = LinearModel(a, [0.1, 0.0, 0.0, 0.05], np.hstack([np.eye(2), np.zeros((2, 2))]))
    q, r = 0.01 * np.eye(4), 0.1 * np.eye(2)
    rule = gauss_hermite_rule(3, 4)
    rng = make_rng(3)
    ekf = qkf = Estimate(np.zeros(4), np.eye(4), np.zeros(2))
    worst = 0.0
    for k in range(50):
        u = math.sin(0.1 * k)
        z = rng.standard_normal(2)
        ekf = ekf_update(ekf_predict(ekf, u, model, q), z, model, r)
        qkf = qkf_measurement_update(qkf_time_update(qkf, u, rule, model, q), z, rule, model, r)
        worst = max(worst, np.abs(ekf.x - qkf.x).max(), np.abs(ekf.cov - qkf.cov).max())
    return worst < 1e-8, f"EKF vs QKF on a linear system: max gap {worst:.1e}"


def _check_particles():
    model = LinearModel([[1.0]], [0.0], [[1.0]])
    rng = make_rng(4)
    ps = initial_particles(np.zeros(1), np.eye(1), 200, rng)
    worst, n_eff_ok = 0.0, True
    for _ in range(20):
        ps, est = pf_step(ps, rng.standard_normal(1), 0.0, model, rng, 0.1 * np.eye(1), np.eye(1))
        worst = max(worst, abs(ps.weights.sum() - 1.0))
        n_eff_ok &= 1.0 <= est.n_eff <= 200 + 1e-9
    return worst < 1e-12 and n_eff_ok, f"weight-sum error {worst:.1e}"


def _check_svsf():
    model = LinearModel([[1.0]], [0.0], [[1.0]])
    est = Estimate(np.array([2.0]), None, np.zeros(1))
    out, _ = svsf_step(est, [2.0], None, model, np.array([0.4]), np.array([1e-3]))
    return bool(np.all(out.x == est.x)), "zero output error gives zero correction"


def _check_pinv_and_rmse():
    m = np.hstack([np.eye(2), np.zeros((2, 2))])
    ok = np.allclose(pseudo_inverse(m), m.T)
    e = np.full(4, 2.0)
    ok &= rmse(e, np.zeros(4)) == 1.0 and rmse(e, np.zeros(4), conventional=True) == 2.0
    return bool(ok), "pseudo-inverse of [I|0] and RMSE reference cases"


CHECKS = {
    "cholesky reconstruction": _check_cholesky,
    "gauss-hermite moments": _check_quadrature,
    "jacobian vs finite differences": _check_jacobian,
    "charge conservation at zero current": _check_charge,
    "output voltage weights": _check_output,
    "linear EKF/QKF agreement": _check_linear_filters,
    "particle weight normalisation": _check_particles,
    "svsf zero-error step": _check_svsf,
    "pseudo-inverse and rmse": _check_pinv_and_rmse,
}


def run_checks():
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, don't abort the remaining checks
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, bool(ok), detail
