"""Simulation and analysis of a Savart-plate polarization-entangled photon source."""

from .errors import ConfigError, ContractViolation, FitFailure, InvalidArgument

__version__ = "0.1.0"

__all__ = ["ConfigError", "ContractViolation", "FitFailure", "InvalidArgument", "__version__"]
