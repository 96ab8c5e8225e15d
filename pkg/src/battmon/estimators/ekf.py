from __future__ import annotations

import numpy as np

from ..core import symmetrize
from ..errors import Diverged, SingularInnovation
from .base import Estimate, Estimator, initial_estimate

MAX_INNOVATION_COND = 1e12


def ekf_predict(est: Estimate, u, model, q) -> Estimate:
    """Propagate the mean through the model and the covariance through its
    Jacobian at the posterior mean.

    Models exposing a checked ``process`` (the battery rejects non-positive
    reciprocal capacitances) are propagated through it.
    """
    phi = model.jacobian(est.x, u)
    x = getattr(model, "process", model.f)(est.x, u)
    p = symmetrize(phi @ est.cov @ phi.T + q)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise Diverged("non-finite EKF prior")
    return Estimate(x=x, cov=p, innovation=np.zeros_like(est.innovation))


def kalman_gain(p_prior, c, r):
    s = c @ p_prior @ c.T + r
    if not np.all(np.isfinite(s)) or np.linalg.cond(s) > MAX_INNOVATION_COND:
        raise SingularInnovation("innovation covariance is (near) singular")
    # K = P C^T S^-1, solved rather than inverted
    return np.linalg.solve(s.T, (p_prior @ c.T).T).T


def ekf_update(prior: Estimate, z, model, r) -> Estimate:
    c = model.measurement_matrix
    k = kalman_gain(prior.cov, c, r)
    innovation = np.asarray(z, dtype=float) - c @ prior.x
    x = prior.x + k @ innovation
    p = symmetrize((np.eye(len(x)) - k @ c) @ prior.cov)
    return Estimate(x=x, cov=p, innovation=innovation)


class ExtendedKalmanFilter(Estimator):
    variant = "EKF"

    def _reset(self):
        return initial_estimate(self.config, self.model.n_meas)

    def _step(self, z, u):
        prior = self.estimate
        if u is not None:
            prior = ekf_predict(prior, u, self.model, self.config.q)
        return ekf_update(prior, z, self.model, self.config.r)
