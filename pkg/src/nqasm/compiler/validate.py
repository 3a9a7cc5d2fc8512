"""Static checks of a resolved subroutine against a unit module."""

from __future__ import annotations

from dataclasses import dataclass

from ..asm import SCRATCH_REGISTERS
from ..isa import Address, ArrayEntry, ArraySlice, Flavor, Register, Subroutine, branch_target_slot
from .analysis import propagate, qubit_registers, read_registers, written_registers
from .unit_module import VANILLA_1Q, UnitModule

__all__ = ["Diagnostic", "validate", "errors_in"]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    index: int
    code: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.severity}: instruction {self.index}: {self.code}" + (f": {self.message}" if self.message else "")


def errors_in(diags) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


def _array_address(op):
    if isinstance(op, (ArrayEntry, ArraySlice, Address)):
        return op.address
    return None


def validate(sub: Subroutine, um: UnitModule, strict: bool | None = None) -> list[Diagnostic]:
    """Return diagnostics; an empty error list means the subroutine may run on ``um``.

    ``strict`` demands that the program already respects NV placement rules
    (measurement on the communication qubit).  It defaults to on for NV-flavored
    input, since nothing will insert moves for it.
    """
    diags: list[Diagnostic] = []
    n = len(sub.instructions)
    try:
        flavor = sub.flavor
    except ValueError:
        return [Diagnostic("error", 0, "MixedFlavors")]
    if strict is None:
        strict = flavor is Flavor.NV
    if flavor is Flavor.NV and not um.is_nv:
        diags.append(Diagnostic("error", 0, "WrongFlavor", "NV instructions on a non-NV unit module"))
    if um.is_nv and flavor is Flavor.VANILLA and strict:
        diags.append(Diagnostic("error", 0, "WrongFlavor", "vanilla instructions need translation for an NV unit module"))

    states = propagate(sub)
    declared: set[int] = set()
    declared_anywhere = {ins.operands[1].address for ins in sub.instructions if ins.mnemonic == "array"}
    last_write: dict[Register, int] = {}

    for i, ins in enumerate(sub.instructions):
        slot = branch_target_slot(ins.opcode)
        if slot is not None and not 0 <= ins.operands[slot] <= n:
            diags.append(Diagnostic("error", i, "InvalidBranchTarget", f"target {ins.operands[slot]} outside [0, {n}]"))

        if ins.mnemonic == "array":
            declared.add(ins.operands[1].address)
        else:
            for op in ins.operands:
                addr = _array_address(op)
                if addr is not None and addr in declared_anywhere and addr not in declared:
                    diags.append(Diagnostic("error", i, "ArrayBeforeDeclaration", f"@{addr} used before its array instruction"))

        # a scratch register read whose value was not set by the lowering run
        # right before this instruction suggests user code shares it
        for r in read_registers(ins):
            if r in SCRATCH_REGISTERS and r in last_write:
                j = last_write[r]
                run = all(sub.instructions[k].mnemonic in ("set", "lea") for k in range(j, i))
                if not run:
                    diags.append(Diagnostic("warning", i, "ReservedRegisterCollision", f"{r} is reserved for set-lowering"))
        for r in written_registers(ins):
            last_write[r] = i

        qregs = qubit_registers(ins)
        if not qregs or states[i] is None:
            continue
        qids = [states[i].value(r) for r in qregs]
        if any(q is not None and um.qubit(q) is None for q in qids):
            diags.append(Diagnostic("error", i, "QubitOutOfRange", f"virtual qubit outside unit module: {qids}"))
            continue
        if None in qids or ins.mnemonic in ("qalloc", "qfree"):
            continue
        diags.extend(_check_gate(i, ins, qids, um, flavor, strict))
    return diags


def _check_gate(i, ins, qids, um: UnitModule, flavor, strict) -> list[Diagnostic]:
    m = ins.mnemonic
    if len(qids) == 2:
        if qids[0] == qids[1]:
            return [Diagnostic("error", i, "SameQubit", "two-qubit gate on one qubit")]
        edge = um.edge(*qids)
        if edge is None:
            return [Diagnostic("error", i, "GateNotSupportedOnPair", f"{m} on unconnected pair {tuple(qids)}")]
        if flavor is Flavor.VANILLA and um.is_nv:
            return []  # translation supplies the native sequence
        if m not in edge.gates:
            return [Diagnostic("error", i, "GateNotSupportedOnPair", f"{m} not available on {tuple(qids)}")]
        if um.is_nv and qids[0] != um.comm:
            return [Diagnostic("error", i, "ControlMustBeComm", f"{m} control must be the communication qubit")]
        return []
    q = um.qubit(qids[0])
    if m == "meas":
        if "meas" not in q.gates:
            if strict or not um.is_nv:
                return [Diagnostic("error", i, "MeasureRequiresCommQubit", f"qubit {q.id} cannot be measured directly")]
        return []
    if flavor is Flavor.VANILLA and um.is_nv and (m in VANILLA_1Q or m == "init"):
        return []
    if m not in q.gates:
        return [Diagnostic("error", i, "GateNotSupported", f"{m} not available on qubit {q.id}")]
    return []
