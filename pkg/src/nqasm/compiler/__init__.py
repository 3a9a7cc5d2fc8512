"""Unit-module aware validation and vanilla -> NV compilation."""

from .counts import GateCounts, gate_counts
from .nv import MODES, CompileResult, NVCompiler, PassOptions, Placement, insert_moves_nv, reorder_commuting_measurements, translate_vanilla_to_nv
from .passes import peephole
from .unit_module import GateSpec, QubitType, UMEdge, UMQubit, UnitModule
from .unitary import block_unitary, equal_up_to_phase
from .validate import Diagnostic, errors_in, validate

__all__ = [
    "GateCounts",
    "gate_counts",
    "MODES",
    "CompileResult",
    "NVCompiler",
    "PassOptions",
    "Placement",
    "insert_moves_nv",
    "reorder_commuting_measurements",
    "translate_vanilla_to_nv",
    "peephole",
    "GateSpec",
    "QubitType",
    "UMEdge",
    "UMQubit",
    "UnitModule",
    "block_unitary",
    "equal_up_to_phase",
    "Diagnostic",
    "errors_in",
    "validate",
]
