"""Simulation and design tools for doubly resonant waveguide photon-pair sources."""
from .errors import (ConvergenceError, DegenerateCavityError, DomainError, ResolutionError,
                     RespdcError)

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DegenerateCavityError", "DomainError", "ResolutionError",
           "RespdcError", "__version__"]
