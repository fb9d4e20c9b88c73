"""Semi-discrete simulation and stability diagnostics for a Timoshenko beam
with type-III heat conduction, viscoelastic memory and frictional damping."""

from .errors import (BlowUpError, ConfigError, ContractError, HypothesisViolation,
                     NumericalFailure, StepFailure)
from .grid import DIRICHLET, FREE, NEUMANN, Grid
from .model import (Coefficients, FrictionLaw, InitialData, LyapunovWeights, MemoryKernel,
                    SimConfig, check_friction, check_kernel)
from .integrator import State, Trajectory, run, step
from .diagnostics import EnergyRecord, energy, dissipation, fit_decay, equivalence_ratios

__all__ = [
    "BlowUpError", "ConfigError", "ContractError", "HypothesisViolation", "NumericalFailure",
    "StepFailure", "DIRICHLET", "FREE", "NEUMANN", "Grid", "Coefficients", "FrictionLaw",
    "InitialData", "LyapunovWeights", "MemoryKernel", "SimConfig", "check_friction",
    "check_kernel", "State", "Trajectory", "run", "step", "EnergyRecord", "energy",
    "dissipation", "fit_decay", "equivalence_ratios",
]

__version__ = "0.1.0"
