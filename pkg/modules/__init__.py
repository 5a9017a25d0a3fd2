# -*- coding: utf-8 -*-
"""BEC Toolkit - Modules Package"""

from .errors import BECError, ConfigError, InvariantViolation, NumericalError, ParameterError
from .model import MassSpectrum, ModelParams, background_spectrum
from .pauli import Mat2C
from .quadrature import QuadratureConfig

__all__ = [
    "BECError",
    "ConfigError",
    "InvariantViolation",
    "NumericalError",
    "ParameterError",
    "MassSpectrum",
    "ModelParams",
    "background_spectrum",
    "Mat2C",
    "QuadratureConfig",
]
