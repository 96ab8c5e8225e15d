"""Independent reference implementations used only by the tests.

Nothing here imports from ``battmon``; parameters are read by attribute
name so any object with ``r_e, r_c, r_t, c_b, c_c`` works.
"""

from .circuit import circuit_solve
from .kf import LinearSystem, reference_kf
from .ode import OdeOracleConfig, integrate_continuous
from .quadrature import gaussian_moment, moment_matching_rule

__all__ = [
    "LinearSystem",
    "OdeOracleConfig",
    "circuit_solve",
    "gaussian_moment",
    "integrate_continuous",
    "moment_matching_rule",
    "reference_kf",
]
