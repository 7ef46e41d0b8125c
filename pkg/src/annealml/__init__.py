"""Annealing-dynamics feature maps for classification.

Classical inputs are compressed with PCA, encoded into transverse-field
Ising problems, evolved coherently, and measured into probability
distributions that feed a linear softmax classifier.  Participation-ratio
diagnostics quantify the effective model size.
"""

from .dynamics import (
    AnnealSchedule,
    IsingProblem,
    ProbDist,
    QuantumState,
    diagonal_ground_states,
    evolve,
    evolve_many,
    evolve_oracle,
    hamiltonian_at,
    output_distribution,
    uniform_state,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "IsingProblem",
    "ProbDist",
    "QuantumState",
    "BACKEND",
    "diagonal_ground_states",
    "evolve",
    "evolve_many",
    "evolve_oracle",
    "hamiltonian_at",
    "output_distribution",
    "uniform_state",
    "__version__",
]
