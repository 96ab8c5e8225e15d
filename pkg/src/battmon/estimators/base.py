from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..core import StateVector
from ..errors import BattmonError, ConfigError

VARIANTS = ("EKF", "PF", "QKF", "SVSF")


@dataclass
class Estimate:
    """Filter output at one time step.

    ``cov`` is ``None`` for the SVSF, which carries no covariance.
    """

    x: np.ndarray
    cov: Optional[np.ndarray]
    innovation: np.ndarray
    wall_time_ns: int = 0
    diverged: bool = False
    weight_collapse: bool = False
    n_eff: Optional[float] = None

    @property
    def state(self) -> StateVector:
        return StateVector.from_array(self.x)

    @property
    def is_finite(self) -> bool:
        if not np.all(np.isfinite(self.x)):
            return False
        return self.cov is None or bool(np.all(np.isfinite(self.cov)))


class LinearModel:
    """``x' = A x + B u``, ``z = C x``; used for cross-checks and small demos."""

    def __init__(self, a, b, c):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.asarray(b, dtype=float)
        self.measurement_matrix = np.atleast_2d(np.asarray(c, dtype=float))
        self.n_states = self.a.shape[0]
        self.n_meas = self.measurement_matrix.shape[0]
        if self.b.ndim == 1:
            self.b = self.b.reshape(self.n_states, -1)

    def f(self, x, u):
        x = np.asarray(x, dtype=float)
        out = x @ self.a.T
        if u is not None:
            out = out + self.b @ np.atleast_1d(np.asarray(u, dtype=float))
        return out

    def jacobian(self, x, u):
        return self.a

    def h(self, x):
        return np.asarray(x) @ self.measurement_matrix.T


def measurement_fn(model):
    h = getattr(model, "h", None)
    if h is not None:
        return h
    c = model.measurement_matrix
    return lambda x: np.asarray(x) @ c.T


def _as_vector(value, n, name):
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = np.full(n, float(v))
    if v.shape != (n,):
        raise ConfigError(f"{name} must have length {n}, got shape {v.shape}")
    return v


@dataclass
class EstimatorConfig:
    variant: str
    initial_state: np.ndarray
    initial_cov: np.ndarray
    q: np.ndarray
    r: np.ndarray
    pf_particle_count: int = 500
    pf_resample_threshold: float = 0.5
    qkf_points_per_dim: int = 3
    svsf_gamma: np.ndarray = field(default_factory=lambda: np.full(4, 0.4))
    svsf_psi: np.ndarray = field(
        default_factory=lambda: np.array([1e-3, 1e-3, 1e-2, 1e-2])
    )
    svsf_error_bound: float = 1e3
    svsf_dwell_steps: int = 100
    divergence_norm: float = 1e9
    seed: int = 0

    def __post_init__(self):
        self.variant = str(self.variant).upper()
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown filter variant {self.variant!r}")
        if isinstance(self.initial_state, StateVector):
            self.initial_state = self.initial_state.as_array()
        self.initial_state = np.atleast_1d(np.asarray(self.initial_state, dtype=float))
        n = self.initial_state.shape[0]
        self.initial_cov = np.atleast_2d(np.asarray(self.initial_cov, dtype=float))
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float))
        self.r = np.atleast_2d(np.asarray(self.r, dtype=float))
        for name in ("initial_cov", "q"):
            if getattr(self, name).shape != (n, n):
                raise ConfigError(f"{name} must be {n}x{n}")
        if self.r.shape[0] != self.r.shape[1]:
            raise ConfigError("r must be square")
        if self.pf_particle_count < 1:
            raise ConfigError("pf_particle_count must be positive")
        if not 0.0 <= self.pf_resample_threshold <= 1.0:
            raise ConfigError("pf_resample_threshold must be a fraction in [0, 1]")
        if self.qkf_points_per_dim not in (3, 5):
            raise ConfigError("qkf_points_per_dim must be 3 or 5")
        gamma = np.atleast_1d(np.asarray(self.svsf_gamma, dtype=float))
        psi = np.atleast_1d(np.asarray(self.svsf_psi, dtype=float))
        if np.any(gamma < 0) or np.any(gamma >= 1):
            raise ConfigError("svsf_gamma entries must lie in [0, 1)")
        if np.any(psi <= 0):
            raise ConfigError("svsf_psi entries must be positive")
        self.svsf_gamma, self.svsf_psi = gamma, psi

    def with_variant(self, variant: str) -> "EstimatorConfig":
        return replace(self, variant=variant)


class Estimator:
    """Single-owner filter state machine.

    Subclasses implement ``_reset`` and ``_step``. The wrapper times each
    step and turns blow-ups (non-finite values, state norm above
    ``divergence_norm``, or a numerical error raised by the recursion) into
    a sticky ``diverged`` flag: from then on the last good estimate is
    returned unchanged.
    """

    variant = ""

    def __init__(self, config: EstimatorConfig, model):
        self.config = config
        self.model = model
        self.reset()

    def reset(self):
        self.diverged = False
        self.diverged_at: Optional[int] = None
        self.n_steps = 0
        self.estimate = self._reset()

    def _reset(self) -> Estimate:
        raise NotImplementedError

    def _step(self, z, u) -> Estimate:
        raise NotImplementedError

    def step(self, z, u=None) -> Estimate:
        """Predict with the input ``u`` applied since the last sample, then
        correct with ``z``. ``u=None`` skips the prediction (first sample)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        k = self.n_steps
        self.n_steps += 1
        if self.diverged:
            return replace(self.estimate, wall_time_ns=0, diverged=True)
        t0 = time.perf_counter_ns()
        try:
            est = self._step(z, u)
            bad = not est.is_finite or np.linalg.norm(est.x) > self.config.divergence_norm
        except BattmonError:
            est, bad = None, True
        elapsed = time.perf_counter_ns() - t0
        if bad:
            self.diverged = True
            self.diverged_at = k
            return replace(self.estimate, wall_time_ns=elapsed, diverged=True)
        est.wall_time_ns = elapsed
        self.estimate = est
        return est


def estimator_step(estimator: Estimator, z, u=None) -> Estimate:
    return estimator.step(z, u)


def initial_estimate(config: EstimatorConfig, n_meas: int) -> Estimate:
    return Estimate(
        x=config.initial_state.copy(),
        cov=config.initial_cov.copy(),
        innovation=np.zeros(n_meas),
    )
