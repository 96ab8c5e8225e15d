"""Error metrics and the summary/ranking tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch
from .estimators.base import VARIANTS

QUANTITIES = ("V_Cb", "V_Cc", "C_b", "C_c")
VOLTAGES = ("V_Cb", "V_Cc")


def rmse(truth, estimate, conventional: bool = False) -> float:
    """Root of the summed squared error divided by ``N`` by default.

    ``conventional=True`` gives the usual ``sqrt(mean(err**2))``; the two
    differ by a factor ``sqrt(N)``.
    """
    truth = np.asarray(truth, dtype=float).ravel()
    estimate = np.asarray(estimate, dtype=float).ravel()
    if truth.shape != estimate.shape:
        raise LengthMismatch(f"{truth.shape[0]} truth vs {estimate.shape[0]} estimates")
    n = truth.shape[0]
    if n == 0:
        raise LengthMismatch("need at least one sample")
    sq = float(np.sum((truth - estimate) ** 2))
    if conventional:
        return float(np.sqrt(sq / n))
    return float(np.sqrt(sq) / n)


@dataclass
class RmseTable:
    """Per-filter RMSE for each quantity, total wall time and divergence."""

    rmse: dict = field(default_factory=dict)  # (filter, quantity) -> float
    conventional: dict = field(default_factory=dict)
    wall_time: dict = field(default_factory=dict)  # filter -> seconds
    diverged: dict = field(default_factory=dict)  # filter -> bool

    @property
    def filters(self):
        return [f for f in VARIANTS if f in self.wall_time] + sorted(
            f for f in self.wall_time if f not in VARIANTS
        )

    def key_value(self, name: str, key: str) -> float:
        if key == "voltage":
            return sum(self.rmse[(name, q)] for q in VOLTAGES)
        if key == "all":
            return sum(self.rmse[(name, q)] for q in QUANTITIES)
        return self.rmse[(name, key)]

    @classmethod
    def from_values(cls, values: dict, wall_time=None, diverged=None) -> "RmseTable":
        """Build from ``{filter: {quantity: rmse}}``."""
        rm = {(f, q): v for f, per in values.items() for q, v in per.items()}
        wall_time = wall_time or {f: 1.0 for f in values}
        diverged = diverged or {f: False for f in values}
        return cls(rmse=rm, wall_time=dict(wall_time), diverged=dict(diverged))


@dataclass
class RankTable:
    key: str
    orders: dict  # case -> [filter, ...] best first


def _variant_index(name):
    return VARIANTS.index(name) if name in VARIANTS else len(VARIANTS)


def rank_filters(tables: dict, key: str = "voltage") -> RankTable:
    """Order filters per case by ascending ``key``.

    Diverged filters go after all non-diverged ones. Ties are broken by
    wall time, then by the fixed order EKF, PF, QKF, SVSF.
    """
    orders = {}
    for case, table in tables.items():
        orders[case] = sorted(
            table.wall_time,
            key=lambda f: (
                bool(table.diverged.get(f, False)),
                _nan_last(table.key_value(f, key)),
                table.wall_time[f],
                _variant_index(f),
                f,
            ),
        )
    return RankTable(key=key, orders=orders)


def _nan_last(v):
    return np.inf if np.isnan(v) else v
