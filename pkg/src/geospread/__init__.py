"""Tangent dynamics versus geodesic spread under the Jacobi and Eisenhart metrics."""
from .errors import (ConfigurationError, InvariantViolation, NumericalBlowup,
                     PreconditionError, SingularityError)
from .integrate import RunConfig, TrajectoryRecord, run_trajectory
from .systems import (AnharmonicChain, DiagonalQuadratic, Harmonic, HenonHeiles,
                      PhaseState, SystemSpec, anharmonic_chain, harmonic,
                      henon_heiles)

__version__ = "0.1.0"

__all__ = [
    "AnharmonicChain", "ConfigurationError", "DiagonalQuadratic", "Harmonic",
    "HenonHeiles", "InvariantViolation", "NumericalBlowup", "PhaseState",
    "PreconditionError", "RunConfig", "SingularityError", "SystemSpec",
    "TrajectoryRecord", "anharmonic_chain", "harmonic", "henon_heiles",
    "run_trajectory",
]
