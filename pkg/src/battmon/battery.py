"""RC equivalent-circuit battery plant.

The circuit has a bulk capacitor ``C_b`` (chemical storage) behind ``R_e``
and a surface capacitor ``C_c`` behind ``R_c``; both branches join a node
that feeds the terminal through ``R_t``. The supply current ``i_s`` is
positive when charging.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .core import MEAS_DIM, STATE_DIM, StateVector
from .errors import DegenerateParameter


@dataclass(frozen=True)
class BatteryParams:
    r_e: float
    r_c: float
    r_t: float
    c_b: float
    c_c: float
    t_s: float = 0.01

    def __post_init__(self):
        for name in ("r_e", "r_c", "r_t", "c_b", "c_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.t_s < 0:
            raise ValueError("t_s must be non-negative")

    @property
    def resistances(self) -> "Resistances":
        return Resistances(self.r_e, self.r_c, self.r_t)

    def with_capacitances(self, c_b: float, c_c: float) -> "BatteryParams":
        return replace(self, c_b=c_b, c_c=c_c)


class Resistances(NamedTuple):
    r_e: float
    r_c: float
    r_t: float


def continuous_derivatives(params: BatteryParams, v_cb, v_cc, i_s):
    """Time derivatives of the two capacitor voltages."""
    r = params.r_e + params.r_c
    dv_cb = (i_s * params.r_c + v_cc - v_cb) / (params.c_b * r)
    dv_cc = (i_s * params.r_e + v_cb - v_cc) / (params.c_c * r)
    return dv_cb, dv_cc


def transition_matrices(params: BatteryParams):
    """``(A, B)`` of the forward-Euler voltage model ``v' = A v + B i_s``."""
    r = params.r_e + params.r_c
    a_b = params.t_s / (params.c_b * r)
    a_c = params.t_s / (params.c_c * r)
    a = np.array([[1.0 - a_b, a_b], [a_c, 1.0 - a_c]])
    b = np.array([a_b * params.r_c, a_c * params.r_e])
    return a, b


def discrete_step(params: BatteryParams, state, i_s):
    """One forward-Euler step of the voltages, ``v + A' v + B i_s`` with
    ``A' = A - I``; the increment form keeps equilibria exact."""
    r = params.r_e + params.r_c
    v_cb, v_cc = float(state[0]), float(state[1])
    a_b = params.t_s / (params.c_b * r)
    a_c = params.t_s / (params.c_c * r)
    return (
        v_cb + a_b * (v_cc - v_cb + params.r_c * i_s),
        v_cc + a_c * (v_cb - v_cc + params.r_e * i_s),
    )


def output_voltage(params: BatteryParams, v_cb, v_cc, i_s):
    r = params.r_e + params.r_c
    return (params.r_c * v_cb + params.r_e * v_cc) / r + (
        params.r_t + params.r_e * params.r_c / r
    ) * i_s


# --- joint state/parameter model -------------------------------------------


def propagate(x, i_s, r_e, r_c, t_s):
    """Joint process model on arrays of shape ``(..., 4)``.

    Voltages follow the Euler step with ``C`` replaced by ``1/w``; the
    reciprocal capacitances are carried over unchanged. No sign checks, so
    particle and quadrature clouds may straddle zero.
    """
    x = np.asarray(x, dtype=float)
    v_cb, v_cc, w_cb, w_cc = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    k = t_s / (r_e + r_c)
    out = np.empty_like(x)
    out[..., 0] = v_cb + k * w_cb * (v_cc - v_cb + r_c * i_s)
    out[..., 1] = v_cc + k * w_cc * (v_cb - v_cc + r_e * i_s)
    out[..., 2] = w_cb
    out[..., 3] = w_cc
    return out


def propagate_jacobian(x, i_s, r_e, r_c, t_s) -> np.ndarray:
    v_cb, v_cc, w_cb, w_cc = (float(v) for v in x)
    k = t_s / (r_e + r_c)
    return np.array(
        [
            [1.0 - k * w_cb, k * w_cb, k * (v_cc - v_cb + r_c * i_s), 0.0],
            [k * w_cc, 1.0 - k * w_cc, 0.0, k * (v_cb - v_cc + r_e * i_s)],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_physical(state: StateVector):
    if not (state.w_cb > 0 and state.w_cc > 0):
        raise DegenerateParameter(
            f"reciprocal capacitances must be positive, got "
            f"w_cb={state.w_cb!r}, w_cc={state.w_cc!r}"
        )


def process_model(state: StateVector, i_s, resist, t_s) -> StateVector:
    _check_physical(state)
    r_e, r_c = resist[0], resist[1]
    return StateVector.from_array(propagate(state.as_array(), i_s, r_e, r_c, t_s))


def jacobian(state: StateVector, i_s, resist, t_s) -> np.ndarray:
    _check_physical(state)
    return propagate_jacobian(state.as_array(), i_s, resist[0], resist[1], t_s)


class BatteryModel:
    """The battery as seen by a filter: assumed resistances and sample time.

    Implements the model protocol used by :mod:`battmon.estimators`:
    ``f``, ``jacobian``, ``measurement_matrix`` and ``svsf_channels``.
    """

    n_states = STATE_DIM
    n_meas = MEAS_DIM

    def __init__(self, r_e, r_c, r_t, t_s, pseudo_min_drive=1e-9):
        self.r_e = float(r_e)
        self.r_c = float(r_c)
        self.r_t = float(r_t)
        self.t_s = float(t_s)
        self.pseudo_min_drive = pseudo_min_drive
        self.measurement_matrix = np.hstack([np.eye(2), np.zeros((2, 2))])

    def __repr__(self):
        return (
            f"BatteryModel(r_e={self.r_e!r}, r_c={self.r_c!r}, "
            f"r_t={self.r_t!r}, t_s={self.t_s!r})"
        )

    @property
    def resistances(self) -> Resistances:
        return Resistances(self.r_e, self.r_c, self.r_t)

    def f(self, x, u):
        return propagate(x, u, self.r_e, self.r_c, self.t_s)

    def process(self, x, u):
        """Single-state propagation that rejects non-physical parameters."""
        state = StateVector.from_array(x)
        return process_model(state, u, self.resistances, self.t_s).as_array()

    def jacobian(self, x, u):
        return jacobian(StateVector.from_array(x), u, self.resistances, self.t_s)

    def h(self, x):
        return np.asarray(x)[..., :2]

    def svsf_channels(self, z, z_prev, u_prev, x_prior):
        """Extended measurement for the SVSF.

        The two voltage rows of the Euler step are solved for ``w_cb`` and
        ``w_cc`` using the previous and current measured voltages and the
        current applied between them. The result is a 4-channel measurement
        with an identity map. A channel whose drive term is too small to
        invert (or the very first step, with no previous sample) reports the
        prior value, i.e. a zero error.
        """
        z = np.asarray(z, dtype=float)
        z_ext = np.empty(4)
        z_ext[:2] = z
        z_ext[2:] = x_prior[2:]
        if z_prev is not None and u_prev is not None and self.t_s > 0:
            k = self.t_s / (self.r_e + self.r_c)
            drive_b = k * (z_prev[1] - z_prev[0] + self.r_c * u_prev)
            drive_c = k * (z_prev[0] - z_prev[1] + self.r_e * u_prev)
            if abs(drive_b) > self.pseudo_min_drive:
                z_ext[2] = (z[0] - z_prev[0]) / drive_b
            if abs(drive_c) > self.pseudo_min_drive:
                z_ext[3] = (z[1] - z_prev[1]) / drive_c
        return z_ext, np.eye(4)


# --- exogenous profiles ----------------------------------------------------


@dataclass(frozen=True)
class FaultProfile:
    """Capacitance trajectory given as ``(t_start, farads)`` breakpoints."""

    breakpoints: tuple
    mode: str = "step"

    def __post_init__(self):
        bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
        if not bps:
            raise ValueError("fault profile needs at least one breakpoint")
        times = [t for t, _ in bps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if any(v <= 0 for _, v in bps):
            raise ValueError("capacitance values must be strictly positive")
        if self.mode not in ("step", "ramp"):
            raise ValueError(f"unknown interpolation mode {self.mode!r}")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, value) -> "FaultProfile":
        return cls(((0.0, value),))


def evaluate_fault(profile: FaultProfile, t) -> float:
    bps = profile.breakpoints
    times = [b[0] for b in bps]
    i = bisect.bisect_right(times, t) - 1
    if i < 0:
        return bps[0][1]
    if profile.mode == "step" or i == len(bps) - 1:
        return bps[i][1]
    (t0, v0), (t1, v1) = bps[i], bps[i + 1]
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


@dataclass(frozen=True)
class CurrentProfile:
    """Supply current in amperes.

    ``samples`` is a zero-order-hold table of ``(t, amps)``; with ``period``
    set it repeats. ``components`` adds closed-form terms, each a mapping
    with ``kind`` ``"step"`` (``t_start``, ``amplitude``) or ``"sine"``
    (``amplitude``, ``period``, optional ``phase``).
    """

    samples: tuple = ()
    period: float | None = None
    components: tuple = field(default=())

    def __post_init__(self):
        s = tuple((float(t), float(i)) for t, i in self.samples)
        if any(b[0] <= a[0] for a, b in zip(s, s[1:])):
            raise ValueError("current samples must be strictly increasing in time")
        if any(not np.isfinite(i) for _, i in s):
            raise ValueError("current samples must be finite")
        if self.period is not None and self.period <= 0:
            raise ValueError("period must be positive")
        comps = tuple(dict(c) for c in self.components)
        for c in comps:
            if c.get("kind") not in ("step", "sine"):
                raise ValueError(f"unknown current component {c!r}")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "components", comps)

    def __call__(self, t: float) -> float:
        value = 0.0
        if self.samples:
            tt = t if self.period is None else t % self.period
            i = bisect.bisect_right([s[0] for s in self.samples], tt) - 1
            value += self.samples[max(i, 0)][1]
        for c in self.components:
            if c["kind"] == "step":
                if t >= c["t_start"]:
                    value += c["amplitude"]
            else:
                value += c["amplitude"] * np.sin(
                    2 * np.pi * t / c["period"] + c.get("phase", 0.0)
                )
        return float(value)

    def sample(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self(t) for t in times])
