"""The four filters behind one ``step(z, u)`` contract."""

from .base import (
    VARIANTS,
    Estimate,
    EstimatorConfig,
    Estimator,
    LinearModel,
    estimator_step,
)
from .ekf import ExtendedKalmanFilter, ekf_predict, ekf_update
from .pf import (
    ParticleFilter,
    ParticleSet,
    effective_sample_size,
    pf_step,
    systematic_resample,
)
from .qkf import (
    QuadratureKalmanFilter,
    QuadraturePointSet,
    gauss_hermite_rule,
    qkf_measurement_update,
    qkf_time_update,
)
from .svsf import SmoothVariableStructureFilter, SvsfMemory, svsf_step

_CLASSES = {
    "EKF": ExtendedKalmanFilter,
    "PF": ParticleFilter,
    "QKF": QuadratureKalmanFilter,
    "SVSF": SmoothVariableStructureFilter,
}


def make_estimator(config: EstimatorConfig, model) -> Estimator:
    return _CLASSES[config.variant](config, model)


__all__ = [
    "VARIANTS",
    "Estimate",
    "EstimatorConfig",
    "Estimator",
    "LinearModel",
    "estimator_step",
    "make_estimator",
    "ExtendedKalmanFilter",
    "ekf_predict",
    "ekf_update",
    "ParticleFilter",
    "ParticleSet",
    "effective_sample_size",
    "pf_step",
    "systematic_resample",
    "QuadratureKalmanFilter",
    "QuadraturePointSet",
    "gauss_hermite_rule",
    "qkf_measurement_update",
    "qkf_time_update",
    "SmoothVariableStructureFilter",
    "SvsfMemory",
    "svsf_step",
]
