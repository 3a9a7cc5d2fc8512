"""Peephole optimisation over straight-line gate runs."""

from __future__ import annotations

from fractions import Fraction

from ..asm import SymbolicSubroutine, resolve, to_symbolic
from ..isa import AngleSpec, Instruction, Label, Subroutine
from .analysis import is_barrier, propagate, qubit_registers

__all__ = ["peephole", "normalize_turns"]

_SELF_INVERSE_1Q = {"x", "y", "z", "h", "k"}
_SELF_INVERSE_2Q = {"cnot", "cphase"}
_SYMMETRIC = {"cphase"}
_ROTATIONS = {"rot_x", "rot_y", "rot_z", "cx_dir", "cy_dir"}

_ANY = object()  # qubit whose id is not statically known


def normalize_turns(t: Fraction) -> Fraction:
    """Reduce a multiple of pi into (-1, 1]; a 2pi rotation is a global phase."""
    t = t % 2
    return t - 2 if t > 1 else t


def _qubits(ins: Instruction, state) -> tuple | None:
    regs = qubit_registers(ins)
    if not regs:
        return None
    if state is None:
        return (_ANY,)
    return tuple(_ANY if state.value(r) is None else state.value(r) for r in regs)


def _is_gate(ins: Instruction) -> bool:
    return ins.opcode.group in ("gate1", "gate2")


def _angle(ins: Instruction) -> Fraction:
    n, d = ins.operands[-2], ins.operands[-1]
    return AngleSpec(n, d).turns


def _with_turns(ins: Instruction, t: Fraction) -> Instruction:
    a = AngleSpec.from_turns(t)
    return Instruction(ins.opcode, ins.operands[:-2] + (a.n, a.d))


def _same_operands(a: Instruction, qa, b: Instruction, qb) -> bool:
    if _ANY in qa or _ANY in qb:
        return False
    if a.mnemonic in _SYMMETRIC:
        return set(qa) == set(qb)
    return qa == qb


def _one_pass(items: list, qubits: list) -> tuple[list, list, bool]:
    n = len(items)
    dead = [False] * n
    changed = False
    for i in range(n):
        ins = items[i]
        if dead[i] or isinstance(ins, Label) or not _is_gate(ins) or qubits[i] is None:
            continue
        qi = qubits[i]
        # find the next live instruction that shares a qubit with ins
        j = None
        for k in range(i + 1, n):
            other = items[k]
            if dead[k]:
                continue
            if isinstance(other, Label) or is_barrier(other):
                break
            qk = qubits[k]
            if qk is None:
                continue
            if _ANY in qk or _ANY in qi or set(qk) & set(qi):
                j = k
                break
        m = ins.mnemonic
        if m in _ROTATIONS:
            t = normalize_turns(_angle(ins))
            if j is not None and items[j].opcode == ins.opcode and _same_operands(ins, qi, items[j], qubits[j]):
                t = normalize_turns(t + _angle(items[j]))
                dead[j] = True
                changed = True
            if t == 0:
                dead[i] = True
                changed = True
            elif t != _angle(ins):
                items[i] = _with_turns(ins, t)
                changed = True
        elif m in _SELF_INVERSE_1Q | _SELF_INVERSE_2Q:
            if j is not None and items[j].opcode == ins.opcode and _same_operands(ins, qi, items[j], qubits[j]):
                dead[i] = dead[j] = True
                changed = True
    keep = [k for k in range(n) if not dead[k]]
    return [items[k] for k in keep], [qubits[k] for k in keep], changed


def peephole(sub: Subroutine) -> Subroutine:
    """Merge same-axis rotations and cancel inverse pairs until nothing changes.

    Only neighbours in the per-qubit sense are combined: two gates merge when no
    instruction touching any of their qubits sits between them.  Scans stop at
    labels, branches, waits and entanglement requests.
    """
    while True:
        states = propagate(sub)
        sym = to_symbolic(sub)
        items = list(sym.items)
        qubits = []
        idx = 0
        for item in items:
            if isinstance(item, Label):
                qubits.append(None)
                continue
            qubits.append(_qubits(item, states[idx]))
            idx += 1
        items, qubits, changed = _one_pass(items, qubits)
        if not changed:
            return sub
        sub = resolve(SymbolicSubroutine(sym.metadata, tuple(items)), lower=False)
