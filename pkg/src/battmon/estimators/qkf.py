from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core import cholesky_factor, symmetrize
from ..errors import SingularInnovation, UnsupportedOrder
from .base import Estimate, Estimator, initial_estimate, measurement_fn
from .ekf import MAX_INNOVATION_COND

SUPPORTED_ORDERS = (3, 5)


@dataclass(frozen=True)
class QuadraturePointSet:
    points: np.ndarray  # (m**d, d) standard-normal abscissae
    weights: np.ndarray  # (m**d,)

    def __len__(self):
        return self.weights.shape[0]


@lru_cache(maxsize=None)
def _univariate(m: int):
    # probabilists' Hermite nodes; weights normalised to a probability rule
    x, w = np.polynomial.hermite_e.hermegauss(m)
    if m == 3:
        x = np.array([-np.sqrt(3.0), 0.0, np.sqrt(3.0)])
        w = np.array([1.0, 4.0, 1.0]) / 6.0
    return x, w / w.sum()


def gauss_hermite_rule(m: int, d: int = 4) -> QuadraturePointSet:
    """Tensor-product Gauss-Hermite rule for ``N(0, I_d)`` with ``m**d`` points."""
    if m not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"points per dimension must be one of {SUPPORTED_ORDERS}")
    if d < 1:
        raise ValueError("dimension must be at least 1")
    x, w = _univariate(m)
    idx = np.array(list(itertools.product(range(m), repeat=d)))
    points = x[idx]
    weights = np.prod(w[idx], axis=1)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadraturePointSet(points, weights)


def _cloud(mean, cov, rule):
    s = cholesky_factor(cov)
    return mean + rule.points @ s.T


def _weighted_cov(a, a_mean, b, b_mean, w):
    # centred form; algebraically equal to sum(w a b^T) - a_mean b_mean^T
    return ((a - a_mean).T * w) @ (b - b_mean)


def qkf_time_update(est: Estimate, u, rule: QuadraturePointSet, model, q) -> Estimate:
    pts = _cloud(est.x, est.cov, rule)
    prop = model.f(pts, u)
    x = rule.weights @ prop
    p = symmetrize(_weighted_cov(prop, x, prop, x, rule.weights) + q)
    return Estimate(x=x, cov=p, innovation=np.zeros_like(est.innovation))


def qkf_measurement_update(prior: Estimate, z, rule: QuadraturePointSet, model, r) -> Estimate:
    w = rule.weights
    pts = _cloud(prior.x, prior.cov, rule)
    zs = measurement_fn(model)(pts)
    z_hat = w @ zs
    p_zz = symmetrize(r + _weighted_cov(zs, z_hat, zs, z_hat, w))
    if not np.all(np.isfinite(p_zz)) or np.linalg.cond(p_zz) > MAX_INNOVATION_COND:
        raise SingularInnovation("innovation covariance is (near) singular")
    p_xz = _weighted_cov(pts, prior.x, zs, z_hat, w)
    gain = np.linalg.solve(p_zz.T, p_xz.T).T
    innovation = np.asarray(z, dtype=float) - z_hat
    x = prior.x + gain @ innovation
    p = symmetrize(prior.cov - gain @ p_zz @ gain.T)
    return Estimate(x=x, cov=p, innovation=innovation)


class QuadratureKalmanFilter(Estimator):
    variant = "QKF"

    def _reset(self):
        self.rule = gauss_hermite_rule(
            self.config.qkf_points_per_dim, len(self.config.initial_state)
        )
        return initial_estimate(self.config, self.model.n_meas)

    def _step(self, z, u):
        prior = self.estimate
        if u is not None:
            prior = qkf_time_update(prior, u, self.rule, self.model, self.config.q)
        return qkf_measurement_update(prior, z, self.rule, self.model, self.config.r)
