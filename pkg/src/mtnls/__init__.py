"""Spectral Galerkin simulator for 2-D NLS with Moser-Trudinger nonlinearity,
its fluctuation-dissipation SDE, stationary-measure estimation and Yudovich
stability diagnostics."""

__version__ = "0.1.0"

from .exceptions import (
    AmplitudeOverflowError,
    ConfigurationError,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    EnsembleError,
    MTNLSError,
    NumericalError,
    UsageError,
)
from .functionals import ModelParams, SeriesPolicy
from .spectral import GridField, SpectralBasis, SpectralField, make_basis, random_field
from .dynamics import NoiseSpec, StepperConfig

__all__ = [
    "AmplitudeOverflowError",
    "ConfigurationError",
    "ConsistencyError",
    "ConvergenceError",
    "DomainError",
    "EnsembleError",
    "GridField",
    "MTNLSError",
    "ModelParams",
    "NoiseSpec",
    "NumericalError",
    "SeriesPolicy",
    "SpectralBasis",
    "SpectralField",
    "StepperConfig",
    "UsageError",
    "make_basis",
    "random_field",
]
