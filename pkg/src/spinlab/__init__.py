"""Relativistic spin kinematics: Moller shift, hidden momentum, spin-1/2 position operator, Wigner rotation."""
from .errors import SpinLabError
from .relkin import NATURAL, UnitSystem

__all__ = ["NATURAL", "SpinLabError", "UnitSystem"]
__version__ = "0.1.0"
