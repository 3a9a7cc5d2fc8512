"""Static helpers: control-flow successors and constant propagation.

Registers persist across subroutines, so nothing is known on entry; values
become known through ``set``/``lea`` and flow through arithmetic, ``store`` and
``load``.  The compiler uses this to find which virtual qubit each quantum
instruction addresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..isa import ArrayEntry, ArraySlice, Instruction, Register, Subroutine, branch_target_slot
from ..shmem import wrap_int32

__all__ = ["ConstState", "successors", "propagate", "qubit_registers", "is_barrier", "written_registers", "read_registers"]


@dataclass
class ConstState:
    regs: dict = field(default_factory=dict)  # Register -> int
    mem: dict = field(default_factory=dict)  # (address, index) -> int

    def copy(self) -> ConstState:
        return ConstState(dict(self.regs), dict(self.mem))

    def join(self, other: ConstState) -> ConstState:
        return ConstState(
            {k: v for k, v in self.regs.items() if other.regs.get(k) == v},
            {k: v for k, v in self.mem.items() if other.mem.get(k) == v},
        )

    def value(self, operand) -> int | None:
        if isinstance(operand, Register):
            return self.regs.get(operand)
        if isinstance(operand, int):
            return operand
        return None

    def entry(self, entry: ArrayEntry) -> int | None:
        idx = self.value(entry.index)
        return None if idx is None else self.mem.get((entry.address, idx))

    def _forget_array(self, address: int | None) -> None:
        self.mem = {k: v for k, v in self.mem.items() if address is not None and k[0] != address}


def successors(sub: Subroutine, i: int) -> list[int]:
    ins = sub.instructions[i]
    slot = branch_target_slot(ins.opcode)
    if slot is None:
        return [i + 1]
    target = ins.operands[slot]
    if ins.mnemonic == "jmp":
        return [target]
    return [i + 1, target]


def _transfer(state: ConstState, ins: Instruction) -> ConstState:
    s = state.copy()
    m, ops = ins.mnemonic, ins.operands
    if m == "set":
        s.regs[ops[0]] = wrap_int32(ops[1])
    elif m == "lea":
        s.regs[ops[0]] = ops[1].address
    elif m in ("add", "sub", "addm", "subm"):
        vals = [s.value(o) for o in ops[1:]]
        result = None
        if None not in vals:
            a, b = vals[0], vals[1]
            if m == "add":
                result = wrap_int32(a + b)
            elif m == "sub":
                result = wrap_int32(a - b)
            elif vals[2] > 0:
                result = (a + b) % vals[2] if m == "addm" else (a - b) % vals[2]
        if result is None:
            s.regs.pop(ops[0], None)
        else:
            s.regs[ops[0]] = result
    elif m == "load":
        v = s.entry(ops[1])
        if v is None:
            s.regs.pop(ops[0], None)
        else:
            s.regs[ops[0]] = v
    elif m == "store":
        idx = s.value(ops[1].index)
        if idx is None:
            s._forget_array(ops[1].address)
        else:
            val = s.value(ops[0])
            if val is None:
                s.mem.pop((ops[1].address, idx), None)
            else:
                s.mem[(ops[1].address, idx)] = val
    elif m == "undef":
        idx = s.value(ops[0].index)
        if idx is None:
            s._forget_array(ops[0].address)
        else:
            s.mem.pop((ops[0].address, idx), None)
    elif m == "array":
        s._forget_array(ops[1].address)
    elif m == "meas":
        s.regs.pop(ops[1], None)
    elif m in ("create_epr", "recv_epr"):
        # the network stack fills the entinfo array later
        entinfo = s.value(ops[-1])
        s._forget_array(entinfo)
    return s


def propagate(sub: Subroutine) -> list[ConstState | None]:
    """Known register/array values before each instruction (None if unreachable)."""
    n = len(sub.instructions)
    states: list[ConstState | None] = [None] * n
    if n == 0:
        return states
    states[0] = ConstState()
    work = [0]
    while work:
        i = work.pop()
        out = _transfer(states[i], sub.instructions[i])
        for j in successors(sub, i):
            if not 0 <= j < n:
                continue
            if states[j] is None:
                states[j] = out
                work.append(j)
            else:
                joined = states[j].join(out)
                if joined != states[j]:
                    states[j] = joined
                    work.append(j)
    return states


def qubit_registers(ins: Instruction) -> list[Register]:
    """Operands that name virtual qubits."""
    group = ins.opcode.group
    if group in ("init", "gate1") or ins.mnemonic in ("qalloc", "qfree", "meas"):
        return [ins.operands[0]]
    if group == "gate2":
        return [ins.operands[0], ins.operands[1]]
    return []


_BARRIERS = {"branch", "wait", "epr"}


def is_barrier(ins: Instruction) -> bool:
    return ins.opcode.group in _BARRIERS


def written_registers(ins: Instruction) -> set[Register]:
    m, ops = ins.mnemonic, ins.operands
    if m in ("set", "lea", "load", "add", "sub", "addm", "subm"):
        return {ops[0]}
    if m == "meas":
        return {ops[1]}
    return set()


def read_registers(ins: Instruction) -> set[Register]:
    m, ops = ins.mnemonic, ins.operands
    if m in ("set", "lea"):
        return set()
    if m in ("add", "sub", "addm", "subm"):
        return set(ops[1:])
    if m == "meas":
        return {ops[0]}
    out = set()
    for o in (ops[1:] if m == "load" else ops):
        if isinstance(o, Register):
            out.add(o)
        elif isinstance(o, ArrayEntry) and isinstance(o.index, Register):
            out.add(o.index)
        elif isinstance(o, ArraySlice):
            out.update(r for r in (o.start, o.stop) if isinstance(r, Register))
    return out
