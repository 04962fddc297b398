"""Cascaded SFG/SPDC photon-pair source modeling in modal-phase-matched waveguides."""

__version__ = "0.1.0"

from .dispersion import DispersionCurve, DispersionModel, Poling, PolingScheme, WaveguideSpec
from .errors import (
    CascadeError,
    ConfigError,
    InfeasibleError,
    IntegrationError,
    MemoryCapError,
    MultipleRootsError,
    RootFindingError,
    UnknownModeError,
    WavelengthRangeError,
)

__all__ = [
    "__version__",
    "CascadeError",
    "ConfigError",
    "DispersionCurve",
    "DispersionModel",
    "InfeasibleError",
    "IntegrationError",
    "MemoryCapError",
    "MultipleRootsError",
    "Poling",
    "PolingScheme",
    "RootFindingError",
    "UnknownModeError",
    "WaveguideSpec",
    "WavelengthRangeError",
]
