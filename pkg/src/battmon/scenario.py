"""Truth trajectories, noise injection and the filter-side model.

Two experimental cases share one truth simulator: *noise only*, where the
filters know the true resistances and initial capacitances, and *with model
error*, where the filter resistances and initial capacitances are biased by
a :class:`MismatchSpec`. In both cases the filters never see the fault
profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .battery import (
    BatteryModel,
    BatteryParams,
    CurrentProfile,
    FaultProfile,
    discrete_step,
    evaluate_fault,
    output_voltage,
)
from .core import NoiseSpec, StateVector, gaussian_sample, make_rng

MAX_STEPS = 10**7


@dataclass(frozen=True)
class MismatchSpec:
    """Multiplicative biases applied to the filter's model when enabled."""

    enabled: bool = False
    r_e: float = 1.0
    r_c: float = 1.0
    r_t: float = 1.0
    c_b: float = 1.0
    c_c: float = 1.0

    def __post_init__(self):
        for name in ("r_e", "r_c", "r_t", "c_b", "c_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"mismatch bias {name} must be positive")


@dataclass(frozen=True)
class Scenario:
    duration: float
    current: CurrentProfile
    true_params: BatteryParams
    noise: NoiseSpec
    faults: tuple = None  # (FaultProfile for C_b, FaultProfile for C_c)
    mismatch: MismatchSpec = field(default_factory=MismatchSpec)
    initial_true_state: tuple = (3.7, 3.7)
    # filter-side voltage guess offset, added to the true initial voltages
    initial_voltage_offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.t_s > 0:
            raise ValueError("t_s must be positive")
        if self.n_steps > MAX_STEPS:
            raise ValueError(f"{self.n_steps} steps exceeds the {MAX_STEPS} step limit")
        if self.faults is None:
            object.__setattr__(
                self,
                "faults",
                (
                    FaultProfile.constant(self.true_params.c_b),
                    FaultProfile.constant(self.true_params.c_c),
                ),
            )

    @property
    def t_s(self) -> float:
        return self.true_params.t_s

    @property
    def seed(self) -> int:
        return self.noise.seed

    @property
    def n_steps(self) -> int:
        return math.ceil(self.duration / self.t_s - 1e-9)

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.t_s


@dataclass(frozen=True)
class TruthRecord:
    t: np.ndarray
    i_s: np.ndarray
    v_cb: np.ndarray
    v_cc: np.ndarray
    c_b: np.ndarray
    c_c: np.ndarray
    v_o: np.ndarray
    z: np.ndarray  # (N, 2)

    def __len__(self):
        return self.t.shape[0]

    def state(self, quantity: str) -> np.ndarray:
        return {"V_Cb": self.v_cb, "V_Cc": self.v_cc, "C_b": self.c_b, "C_c": self.c_c}[
            quantity
        ]


def simulate_truth(s: Scenario) -> TruthRecord:
    """Step the Euler plant with the fault-driven capacitances.

    Process noise enters the two voltages only; the capacitances follow the
    fault profiles exactly. At every step the measurement noise is drawn
    first, then the process noise, from one generator seeded by ``s.seed``.
    """
    n = s.n_steps
    rng = make_rng(s.seed)
    q_v = s.noise.process_cov[:2, :2]
    r = s.noise.measurement_cov
    fault_b, fault_c = s.faults
    cols = {k: np.empty(n) for k in ("t", "i_s", "v_cb", "v_cc", "c_b", "c_c", "v_o")}
    z = np.empty((n, 2))
    x = np.array(s.initial_true_state, dtype=float)
    zero2 = np.zeros(2)
    for k in range(n):
        t = k * s.t_s
        i_s = s.current(t)
        params = s.true_params.with_capacitances(
            evaluate_fault(fault_b, t), evaluate_fault(fault_c, t)
        )
        cols["t"][k] = t
        cols["i_s"][k] = i_s
        cols["v_cb"][k], cols["v_cc"][k] = x
        cols["c_b"][k], cols["c_c"][k] = params.c_b, params.c_c
        cols["v_o"][k] = output_voltage(params, x[0], x[1], i_s)
        z[k] = x + gaussian_sample(rng, zero2, r)
        x = np.array(discrete_step(params, x, i_s)) + gaussian_sample(rng, zero2, q_v)
    for arr in (*cols.values(), z):
        arr.setflags(write=False)
    return TruthRecord(z=z, **cols)


@dataclass(frozen=True)
class FilterSetup:
    model: BatteryModel
    initial_state: StateVector


def filter_model_for(s: Scenario) -> FilterSetup:
    """Model and initial guess handed to every filter in a case."""
    p = s.true_params
    m = s.mismatch if s.mismatch.enabled else MismatchSpec()
    model = BatteryModel(p.r_e * m.r_e, p.r_c * m.r_c, p.r_t * m.r_t, p.t_s)
    c_b0 = evaluate_fault(s.faults[0], 0.0) * m.c_b
    c_c0 = evaluate_fault(s.faults[1], 0.0) * m.c_c
    v0 = np.asarray(s.initial_true_state, dtype=float) + np.asarray(
        s.initial_voltage_offset, dtype=float
    )
    return FilterSetup(model, StateVector.from_physical(v0[0], v0[1], c_b0, c_c0))
