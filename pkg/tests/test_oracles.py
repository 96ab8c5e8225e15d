"""Self-checks of the reference implementations."""

import numpy as np
import pytest

from battmon.battery import BatteryParams
from tests.oracles import (
    LinearSystem,
    OdeOracleConfig,
    circuit_solve,
    gaussian_moment,
    integrate_continuous,
    moment_matching_rule,
    reference_kf,
)
from tests.oracles.circuit import loop_residuals
from tests.oracles.quadrature import multi_indices, tensor_moment


def random_params(rng):
    return BatteryParams(
        r_e=rng.uniform(1e-3, 0.1), r_c=rng.uniform(1e-3, 0.1), r_t=rng.uniform(1e-3, 0.1),
        c_b=rng.uniform(1, 100), c_c=rng.uniform(0.1, 10), t_s=0.01,
    )


def test_circuit_at_rest(params):
    i_b, i_c, v_o = circuit_solve(params, 3.7, 3.7, 0.0)
    assert i_b == pytest.approx(0.0, abs=1e-15)
    assert i_c == pytest.approx(0.0, abs=1e-15)
    assert v_o == pytest.approx(3.7, abs=1e-15)


def test_circuit_satisfies_kirchhoff():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = random_params(rng)
        v_cb, v_cc, i_s = rng.uniform(3, 4.2), rng.uniform(3, 4.2), rng.uniform(-50, 50)
        sol = circuit_solve(p, v_cb, v_cc, i_s)
        assert np.max(np.abs(loop_residuals(p, v_cb, v_cc, i_s, *sol))) < 1e-12


def test_circuit_matches_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = random_params(rng)
        v_cb, v_cc, i_s = rng.uniform(3, 4.2), rng.uniform(3, 4.2), rng.uniform(-50, 50)
        i_b, _, v_o = circuit_solve(p, v_cb, v_cc, i_s)
        r = p.r_e + p.r_c
        assert i_b == pytest.approx((i_s * p.r_c + v_cc - v_cb) / r, abs=1e-12)
        expected = p.r_c / r * v_cb + p.r_e / r * v_cc + (p.r_t + p.r_e * p.r_c / r) * i_s
        assert v_o == pytest.approx(expected, abs=1e-12)


def test_ode_equilibrium(params):
    _, v = integrate_continuous(params, (3.5, 3.5), lambda t: 0.0, (0, 1), t_s=0.1)
    assert np.allclose(v, 3.5, atol=1e-14)


def test_ode_converged_in_substeps(params):
    cur = lambda t: 20.0
    _, a = integrate_continuous(params, (3.6, 3.9), cur, (0, 0.01), config=OdeOracleConfig(100))
    _, b = integrate_continuous(params, (3.6, 3.9), cur, (0, 0.01), config=OdeOracleConfig(200))
    assert np.max(np.abs(a[-1] - b[-1]) / np.abs(b[-1])) < 1e-10


def test_ode_charge_equalisation(params):
    _, v = integrate_continuous(
        params, (3.5, 4.0), lambda t: 0.0, (0, 2.0), t_s=0.1, config=OdeOracleConfig(20)
    )
    assert abs(v[-1, 0] - v[-1, 1]) < 1e-8
    # total charge is conserved, so the common value is the capacitance-weighted mean
    expected = (params.c_b * 3.5 + params.c_c * 4.0) / (params.c_b + params.c_c)
    assert v[-1, 0] == pytest.approx(expected, abs=1e-8)


def test_ode_substeps_validated():
    with pytest.raises(ValueError):
        OdeOracleConfig(0)


def test_reference_kf_static_scalar():
    sys = LinearSystem(a=[[1.0]], b=[[0.0]], c=[[1.0]], q=[[0.0]], r=[[1.0]])
    n = 20
    _, ps = reference_kf(sys, [0.0], [[1.0]], [0.0] * n, [[0.3]] * n)
    for k, p in enumerate(ps, start=1):
        assert p[0, 0] == pytest.approx(1.0 / (k + 1), rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 7])
def test_moment_matching_rule_is_exact(m):
    x, w = moment_matching_rule(m)
    for p in range(2 * m):
        scale = gaussian_moment(p + p % 2)  # E|x|^p bound for the rounding error
        assert w @ x**p == pytest.approx(gaussian_moment(p), abs=1e-12 * scale)


def test_gaussian_moments():
    assert [gaussian_moment(p) for p in range(9)] == [1, 0, 1, 0, 3, 0, 15, 0, 105]


def test_tensor_helpers():
    pts = np.array([[1.0, 2.0], [-1.0, 0.5]])
    w = np.array([0.25, 0.75])
    assert tensor_moment(pts, w, (1, 1)) == pytest.approx(0.25 * 2 - 0.75 * 0.5)
    assert len(list(multi_indices(2, 2))) == 6
