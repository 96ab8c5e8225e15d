"""Smooth variable structure filter.

The correction pushes the estimate towards the measured output with a
magnitude set by the current and previous output errors and a direction set
by a saturated error: full switching outside the boundary layer ``psi``,
proportional inside it. There is no covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import pseudo_inverse
from ..errors import Diverged
from .base import Estimate, Estimator


@dataclass
class SvsfMemory:
    """What the SVSF carries between steps."""

    e_post: Optional[np.ndarray] = None  # a posteriori output error
    z_prev: Optional[np.ndarray] = None
    over_bound: int = 0  # consecutive steps with output error above bound


def saturate(e, psi):
    return np.clip(np.asarray(e) / psi, -1.0, 1.0)


def svsf_gain(e_prior, e_post_prev, gamma, psi, c_ext):
    magnitude = np.abs(np.abs(e_prior) + gamma * np.abs(e_post_prev))
    return pseudo_inverse(c_ext) @ (magnitude * saturate(e_prior, psi))


def measurement_channels(model, z, z_prev, u, x_prior):
    ext = getattr(model, "svsf_channels", None)
    if ext is not None:
        return ext(z, z_prev, u, x_prior)
    return np.asarray(z, dtype=float), model.measurement_matrix


def svsf_step(
    est: Estimate,
    z,
    u,
    model,
    gamma,
    psi,
    memory: Optional[SvsfMemory] = None,
    error_bound: float = np.inf,
    dwell_steps: int = 1,
):
    """One predict/correct cycle. Returns ``(Estimate, SvsfMemory)``."""
    memory = memory or SvsfMemory()
    z = np.asarray(z, dtype=float)
    prior = model.f(est.x, u) if u is not None else np.asarray(est.x, dtype=float)
    z_ext, c_ext = measurement_channels(model, z, memory.z_prev, u, prior)
    e_prior = z_ext - c_ext @ prior
    e_prev = memory.e_post if memory.e_post is not None else np.zeros_like(e_prior)
    x = prior + svsf_gain(e_prior, e_prev, gamma, psi, c_ext)
    e_post = z_ext - c_ext @ x

    n_meas = len(z)
    over = memory.over_bound + 1 if np.max(np.abs(e_prior[:n_meas])) > error_bound else 0
    if over >= dwell_steps:
        raise Diverged(f"SVSF output error above {error_bound} for {over} steps")
    new_memory = SvsfMemory(e_post=e_post, z_prev=z, over_bound=over)
    return Estimate(x=x, cov=None, innovation=e_prior[:n_meas]), new_memory


class SmoothVariableStructureFilter(Estimator):
    variant = "SVSF"

    def _reset(self):
        self.memory = SvsfMemory()
        return Estimate(
            x=self.config.initial_state.copy(),
            cov=None,
            innovation=np.zeros(self.model.n_meas),
        )

    def _step(self, z, u):
        cfg = self.config
        est, self.memory = svsf_step(
            self.estimate, z, u, self.model, cfg.svsf_gamma, cfg.svsf_psi,
            self.memory, cfg.svsf_error_bound, cfg.svsf_dwell_steps,
        )
        return est
