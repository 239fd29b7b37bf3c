"""Reconstructing dynamics up to trajectory equivalence from delay observations."""

__version__ = "0.1.0"

from .errors import ConfigError, PointError, PreconditionError, ReconError, UnsupportedError
from .spaces import (AddressSpace, CantorSet, Circle, Dendrite, FiniteSpace, Interval,
                     SierpinskiCarpet, SierpinskiGasket, Simplex2, make_space)
from .dynamics import Observable, System, iterate, orbit, periodic_points

__all__ = [
    "AddressSpace", "CantorSet", "Circle", "ConfigError", "Dendrite", "FiniteSpace",
    "Interval", "Observable", "PointError", "PreconditionError", "ReconError",
    "SierpinskiCarpet", "SierpinskiGasket", "Simplex2", "System", "UnsupportedError",
    "iterate", "make_space", "orbit", "periodic_points",
]
