"""Gaussian dynamics of the radial modes of trapped-ion chains.

Submodules: ``chain`` (equilibrium geometry and couplings), ``gaussian``
(states, symplectic maps, open evolution), ``dynamics`` (schedules with a
thermal bath), ``entanglement``, ``transfer``, ``bell``, ``compiler`` and the
``scenario``/``cli`` front end.
"""

from .bell import BellSettings, b3_scan, displaced_parity, klyshko_b3, nm_conversion
from .chain import ChainConfig, ChainModel, build_model, equilibrium_positions, hamiltonian
from .dynamics import Bath, evolve_schedule
from .entanglement import (
    Bipartition,
    all_bipartitions_negativity,
    log_negativity,
    pairwise_negativity,
)
from .errors import (
    ConfigError,
    PartitionError,
    RadialInstabilityError,
    RadialModesError,
    SolverError,
    StateError,
    SynthesisError,
)
from .gaussian import (
    GaussianState,
    NoiseModel,
    SymplecticMatrix,
    evolve_closed,
    evolve_open,
    ground_state,
    propagator,
    symplectic_form,
)
from .compiler import FrequencyPlan, Instruction, Schedule, TargetOp, compile_target, verify_schedule

__version__ = "0.1.0"

__all__ = [
    "BellSettings",
    "b3_scan",
    "displaced_parity",
    "klyshko_b3",
    "nm_conversion",
    "ChainConfig",
    "ChainModel",
    "build_model",
    "equilibrium_positions",
    "hamiltonian",
    "Bath",
    "evolve_schedule",
    "Bipartition",
    "all_bipartitions_negativity",
    "log_negativity",
    "pairwise_negativity",
    "ConfigError",
    "PartitionError",
    "RadialInstabilityError",
    "RadialModesError",
    "SolverError",
    "StateError",
    "SynthesisError",
    "GaussianState",
    "NoiseModel",
    "SymplecticMatrix",
    "evolve_closed",
    "evolve_open",
    "ground_state",
    "propagator",
    "symplectic_form",
    "FrequencyPlan",
    "Instruction",
    "Schedule",
    "TargetOp",
    "compile_target",
    "verify_schedule",
]
