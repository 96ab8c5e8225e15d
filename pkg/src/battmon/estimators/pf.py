"""Sequential importance resampling with the bootstrap proposal.

Drawing from the transition prior makes the proposal cancel against the
transition density, so the weight update is just the measurement
likelihood. Resampling is systematic and triggers when the effective
sample size drops below ``threshold * N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import cholesky_factor, make_rng
from .base import Estimate, Estimator, measurement_fn


@dataclass
class ParticleSet:
    particles: np.ndarray  # (N, n)
    weights: np.ndarray  # (N,)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.particles

    def covariance(self) -> np.ndarray:
        d = self.particles - self.mean()
        return (d.T * self.weights) @ d


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def systematic_resample(particles, weights, rng) -> np.ndarray:
    """Indices of the surviving particles; one uniform draw per call."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right")


def initial_particles(mean, cov, n, rng) -> ParticleSet:
    s = cholesky_factor(cov)
    x = mean + rng.standard_normal((n, len(mean))) @ s.T
    return ParticleSet(x, np.full(n, 1.0 / n))


def pf_step(
    ps: ParticleSet, z, u, model, rng, q, r, resample_threshold=0.5,
    q_factor=None, r_inv=None,
):
    """One SIR step. Returns ``(ParticleSet, Estimate)``.

    The estimate is the weighted mean and covariance after reweighting and
    before resampling. If every likelihood vanishes the weights are reset to
    uniform and the estimate carries ``weight_collapse=True``.
    ``q_factor`` (a Cholesky factor of ``q``) and ``r_inv`` may be passed in
    to skip refactoring constant covariances every step.
    """
    x = ps.particles
    n, dim = x.shape
    if u is not None:
        x = model.f(x, u)
        s = cholesky_factor(q) if q_factor is None else q_factor
        if np.any(s):
            x = x + rng.standard_normal((n, dim)) @ s.T
    h = measurement_fn(model)
    z = np.asarray(z, dtype=float)
    prior_mean = ps.weights @ x
    resid = z - h(x)
    if r_inv is None:
        r_inv = np.linalg.inv(np.atleast_2d(r))
    with np.errstate(over="ignore", invalid="ignore"):  # collapse handled below
        loglik = -0.5 * np.sum((resid @ r_inv) * resid, axis=1)

    # weights are only defined up to a constant: shift by the best particle
    collapsed = False
    w_prev = ps.weights
    if w_prev[0] == w_prev[-1] and np.all(w_prev == w_prev[0]):
        logw = loglik  # uniform prior weights only shift every term equally
    else:
        with np.errstate(divide="ignore"):
            logw = np.log(w_prev) + loglik
    top = logw.max()
    if not np.isfinite(top):
        finite = np.isfinite(logw)
        if finite.any():
            logw = np.where(finite, logw, -np.inf)
            top = logw.max()
    if not np.isfinite(top):
        collapsed = True
        w = np.full(n, 1.0 / n)
    else:
        w = np.exp(logw - top)
        w /= w.sum()

    mean = w @ x
    d = x - mean
    n_eff = 1.0 / float(w @ w)
    est = Estimate(
        x=mean,
        cov=(d.T * w) @ d,
        innovation=z - h(prior_mean),
        weight_collapse=collapsed,
        n_eff=n_eff,
    )
    out = ParticleSet(x, w)
    if n_eff < resample_threshold * n:
        idx = systematic_resample(x, w, rng)
        out = ParticleSet(x[idx], np.full(n, 1.0 / n))
    return out, est


class ParticleFilter(Estimator):
    variant = "PF"

    def _reset(self):
        cfg = self.config
        self.rng = make_rng(cfg.seed)
        self._q_factor = cholesky_factor(cfg.q)
        self._r_inv = np.linalg.inv(np.atleast_2d(cfg.r))
        self.particles = initial_particles(
            cfg.initial_state, cfg.initial_cov, cfg.pf_particle_count, self.rng
        )
        return Estimate(
            x=self.particles.mean(),
            cov=self.particles.covariance(),
            innovation=np.zeros(self.model.n_meas),
            n_eff=float(cfg.pf_particle_count),
        )

    def _step(self, z, u):
        cfg = self.config
        self.particles, est = pf_step(
            self.particles, z, u, self.model, self.rng, cfg.q, cfg.r,
            cfg.pf_resample_threshold, q_factor=self._q_factor, r_inv=self._r_inv,
        )
        return est
