"""Shared numeric types, small dense matrix helpers and the RNG contract.

State vectors are stored in reciprocal-capacitance coordinates
``[v_cb, v_cc, w_cb, w_cc]`` with ``w = 1 / C``. Callers that want the
physical ordering ``[V_Cb, V_Cc, C_b, C_c]`` go through
:meth:`StateVector.to_physical` / :meth:`StateVector.from_physical`.

Random numbers come from numpy's ``PCG64`` bit generator (a permuted
linear congruential generator) and Gaussian variates from numpy's ziggurat
``standard_normal`` transform. One generator is created per run via
:func:`make_rng` and never shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefinite

STATE_DIM = 4
MEAS_DIM = 2

# pivots below this multiple of max|m| are treated as exact zeros
_PIVOT_CLAMP = 1e-14
_PIVOT_FAIL = 1e-8
_SYM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    v_cb: float
    v_cc: float
    w_cb: float
    w_cc: float

    @property
    def c_b(self) -> float:
        return _recip(self.w_cb)

    @property
    def c_c(self) -> float:
        return _recip(self.w_cc)

    @property
    def is_physical(self) -> bool:
        return self.w_cb > 0 and self.w_cc > 0

    def as_array(self) -> np.ndarray:
        return np.array([self.v_cb, self.v_cc, self.w_cb, self.w_cc], dtype=float)

    def to_physical(self) -> np.ndarray:
        """Return ``[V_Cb, V_Cc, C_b, C_c]``."""
        return np.array([self.v_cb, self.v_cc, self.c_b, self.c_c], dtype=float)

    @classmethod
    def from_array(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (STATE_DIM,):
            raise ValueError(f"expected a 4-vector, got shape {x.shape}")
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))

    @classmethod
    def from_physical(cls, v_cb, v_cc, c_b, c_c) -> "StateVector":
        if c_b <= 0 or c_c <= 0:
            raise ValueError("capacitances must be positive")
        return cls(float(v_cb), float(v_cc), 1.0 / c_b, 1.0 / c_c)


def _recip(w: float) -> float:
    if w == 0:
        return float("inf")
    return 1.0 / w


def capacitance_from_reciprocal(w):
    """Elementwise ``1 / w``, mapping exact zeros to ``inf`` without warnings."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(w == 0.0, np.inf, 1.0 / np.where(w == 0.0, 1.0, w))


@dataclass(frozen=True)
class NoiseSpec:
    """Covariances of the additive process (4x4) and measurement (2x2) noise."""

    process_cov: np.ndarray
    measurement_cov: np.ndarray
    seed: int = 0

    def __post_init__(self):
        q = np.array(self.process_cov, dtype=float)
        r = np.array(self.measurement_cov, dtype=float)
        for name, m in (("process_cov", q), ("measurement_cov", r)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square")
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(m).min() < -1e-12 * max(1.0, np.abs(m).max()):
                raise NotPositiveSemidefinite(f"{name} is not PSD")
        q.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "process_cov", q)
        object.__setattr__(self, "measurement_cov", r)


@dataclass(frozen=True)
class Measurement:
    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError("measurement has non-finite entries")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def cholesky_factor(m) -> np.ndarray:
    """Lower-triangular ``S`` with ``S @ S.T == m`` for symmetric PSD ``m``.

    Pivots that are negative only through rounding (above ``-1e-8 * max|m|``)
    are clamped to zero and their column below the diagonal is zeroed, so
    rank-deficient covariances factor cleanly. A clearly negative pivot
    raises :class:`NotPositiveSemidefinite`.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    scale = float(np.abs(m).max()) if m.size else 0.0
    if not np.isfinite(scale):
        raise NotPositiveSemidefinite("matrix has non-finite entries")
    if scale == 0.0:
        return np.zeros_like(m)
    if np.abs(m - m.T).max() > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")

    s = np.zeros_like(m)
    for j in range(n):
        row = s[j, :j]
        pivot = m[j, j] - row @ row
        if pivot < -_PIVOT_FAIL * scale:
            raise NotPositiveSemidefinite(
                f"pivot {j} is {pivot:.3e} (max|m| = {scale:.3e})"
            )
        if pivot <= _PIVOT_CLAMP * scale:
            continue
        d = np.sqrt(pivot)
        s[j, j] = d
        if j + 1 < n:
            s[j + 1 :, j] = (m[j + 1 :, j] - s[j + 1 :, :j] @ row) / d
    return s


def make_rng(seed: int) -> np.random.Generator:
    """PCG64-backed generator; the only sanctioned source of randomness."""
    return np.random.Generator(np.random.PCG64(seed))


def gaussian_sample(rng: np.random.Generator, mean, cov) -> np.ndarray:
    """One draw from ``N(mean, cov)`` via ``mean + S @ z`` with ``S = chol(cov)``.

    Always consumes exactly ``len(mean)`` standard normals, so the stream
    position depends only on the dimension and the call count.
    """
    mean = np.asarray(mean, dtype=float)
    s = cholesky_factor(cov)
    z = rng.standard_normal(mean.shape[0])
    return mean + s @ z


def pseudo_inverse(m) -> np.ndarray:
    """Moore-Penrose inverse (SVD based, minimum-norm for rank-deficient input)."""
    return np.linalg.pinv(np.asarray(m, dtype=float))
