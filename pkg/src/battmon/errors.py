"""Exception types shared across the package."""


class BattmonError(Exception):
    pass


class NotPositiveSemidefinite(BattmonError, ValueError):
    """A matrix that should be a covariance has a clearly negative pivot."""


class DegenerateParameter(BattmonError, ValueError):
    """A reciprocal capacitance is zero or negative."""


class SingularInnovation(BattmonError, ArithmeticError):
    pass


class Diverged(BattmonError, ArithmeticError):
    pass


class WeightCollapse(BattmonError, ArithmeticError):
    pass


class UnsupportedOrder(BattmonError, ValueError):
    pass


class LengthMismatch(BattmonError, ValueError):
    pass


class ConfigError(BattmonError, ValueError):
    pass
