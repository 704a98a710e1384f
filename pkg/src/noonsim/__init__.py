"""Simulation toolkit for NOON-state generation via Fredkin gates and atom-cavity transfer.

Modules
-------
fock        constrained Fock bases, state vectors, operators, evolution, detection
optics      beam splitters, phase shifters, cross-Kerr couplings
fredkin     closed-form and circuit Fredkin gates, bootstrapped Kerr control
atomcavity  GHZ preparation and the five-level collective adiabatic transfer
ramsey      dispersive Fredkin gate inside an atomic Ramsey interferometer
feasibility scalar parameter arithmetic
cli         scenario runner (``noonsim``)
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .fock import (
    ConfigurationError,
    ContractViolation,
    LinearOperator,
    ModeSystem,
    NumericalError,
    PulseSchedule,
    ResourceError,
    StateVector,
)

__all__ = [
    "ConfigurationError",
    "ContractViolation",
    "LinearOperator",
    "ModeSystem",
    "NumericalError",
    "PulseSchedule",
    "ResourceError",
    "StateVector",
    "__version__",
]
