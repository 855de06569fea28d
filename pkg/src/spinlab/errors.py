"""Exception hierarchy shared by all spinlab modules."""


class SpinLabError(Exception):
    """Base class for every error raised by spinlab."""


class InvalidParameterError(SpinLabError, ValueError):
    pass


class SuperluminalError(SpinLabError, ValueError):
    """A velocity reached or exceeded the speed of light."""


class NumericDegradationError(SpinLabError, ArithmeticError):
    """A composed Lorentz transform drifted off the group manifold."""


class DecompositionError(SpinLabError, ArithmeticError):
    pass


class SingularFieldError(SpinLabError, ValueError):
    """Field evaluated at its own source point."""


class DomainViolationError(SpinLabError, ValueError):
    """Input lies outside the regime where the low-speed formulas apply."""


class OriginOverlapError(SpinLabError, ValueError):
    """Wavepacket carries non-negligible weight near P = 0, where 1/P^2 diverges."""


class TruncationError(SpinLabError, ValueError):
    """Momentum grid is too small to hold the requested packet."""


class QuadratureError(SpinLabError, ArithmeticError):
    pass


class SymmetryError(SpinLabError, ValueError):
    pass


class ConfigError(SpinLabError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key path."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
