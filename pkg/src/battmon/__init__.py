"""Condition monitoring of an RC battery with four Bayesian/robust filters."""

from .battery import (
    BatteryModel,
    BatteryParams,
    CurrentProfile,
    FaultProfile,
    discrete_step,
    evaluate_fault,
    jacobian,
    output_voltage,
    process_model,
)
from .core import Measurement, NoiseSpec, StateVector, cholesky_factor, make_rng
from .errors import BattmonError
from .estimators import VARIANTS, Estimate, EstimatorConfig, make_estimator
from .harness import HarnessConfig, load_config, run_benchmark, export
from .metrics import RankTable, RmseTable, rank_filters, rmse
from .scenario import MismatchSpec, Scenario, TruthRecord, simulate_truth

__version__ = "0.1.0"
