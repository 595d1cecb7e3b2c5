"""Time-domain simulation of Maxwell's equations in dispersive (Drude/Lorentz) media."""

from .config import SimConfig, format_config, parse_config, preset
from .grid import FieldState, GridSpec, MediumMap, Rectangle, sample_medium, support_radius
from .materials import LorentzMaterial, LorentzPole, chi_hat, kernel_lambda, lambda_hat
from .solver import Simulation, SourceSpec, StepScheme, run

__version__ = "0.1.0"

__all__ = [
    "FieldState", "GridSpec", "LorentzMaterial", "LorentzPole", "MediumMap", "Rectangle",
    "SimConfig", "Simulation", "SourceSpec", "StepScheme", "chi_hat", "format_config",
    "kernel_lambda", "lambda_hat", "parse_config", "preset", "run", "sample_medium", "support_radius",
]
