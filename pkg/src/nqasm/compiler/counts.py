"""Gate counts and estimated duration of a compiled subroutine."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MissingDurationEntry
from ..isa import Subroutine
from .analysis import propagate, qubit_registers
from .unit_module import UnitModule

__all__ = ["GateCounts", "gate_counts"]

_TIMED = ("init", "gate1", "gate2")


@dataclass(frozen=True)
class GateCounts:
    two_qubit_ops: int = 0
    moves: int = 0
    duration: float = 0.0  # ns, sum over the listed instructions

    def to_dict(self) -> dict:
        return {"two_qubit_ops": self.two_qubit_ops, "moves": self.moves, "duration_ns": self.duration}


def gate_counts(sub: Subroutine, um: UnitModule, moves: int = 0) -> GateCounts:
    """Static count over the instruction list (each instruction once).

    Classical instructions, allocation and entanglement requests take no
    time here; every quantum gate, init and measurement must have a duration
    entry in ``um``.
    """
    states = propagate(sub)
    two = 0
    total = 0.0
    for i, ins in enumerate(sub.instructions):
        if ins.opcode.group not in _TIMED and ins.mnemonic != "meas":
            continue
        qids = tuple(states[i].value(r) for r in qubit_registers(ins)) if states[i] is not None else (None,)
        if None in qids:
            raise MissingDurationEntry(f"instruction {i}: qubit of {ins.mnemonic} not statically known")
        spec = um.gate_spec(ins.mnemonic, qids)
        if spec is None:
            raise MissingDurationEntry(f"instruction {i}: no duration for {ins.mnemonic} on {qids}")
        if ins.opcode.group == "gate2":
            two += 1
        total += spec.duration
    return GateCounts(two, moves, total)
