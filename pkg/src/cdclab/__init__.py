"""Exact simulator and converse checker for coded distributed computing."""

from .bits import Bits
from .model import (
    ComputationAssignment,
    IvaId,
    JobSpec,
    LoadTriple,
    Placement,
    communication_load,
    computation_load,
    generate_files,
    map_iva,
    reduce_output,
    storage_space,
)

__version__ = "0.1.0"

__all__ = [
    "Bits",
    "ComputationAssignment",
    "IvaId",
    "JobSpec",
    "LoadTriple",
    "Placement",
    "communication_load",
    "computation_load",
    "generate_files",
    "map_iva",
    "reduce_output",
    "storage_space",
]
