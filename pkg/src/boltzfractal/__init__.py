"""Simulation and multifractal analysis of Boltzmann velocity jump paths."""

from .cross_section import CrossSection, from_inverse_power
from .errors import ConfigError, DomainError, EventBufferOverflow, InputError, ParseError, StorageError
from .paths import JumpEvent, PathRecord, position_path, reconstruct
from .path_store import read_path, write_path
from .simulator import Maxwellian, SimulationConfig, TwoPoint, EmpiricalFile, run, simulate_replica

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CrossSection",
    "DomainError",
    "EmpiricalFile",
    "EventBufferOverflow",
    "InputError",
    "JumpEvent",
    "Maxwellian",
    "ParseError",
    "PathRecord",
    "SimulationConfig",
    "StorageError",
    "TwoPoint",
    "from_inverse_power",
    "position_path",
    "read_path",
    "reconstruct",
    "run",
    "simulate_replica",
    "write_path",
    "__version__",
]
