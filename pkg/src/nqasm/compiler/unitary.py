"""Unitary of a pure gate block, used as an oracle for translations."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..errors import NotAGateBlock
from ..gates import gate_matrix
from ..isa import AngleSpec, Instruction, Register, angle_value

__all__ = ["block_unitary", "equal_up_to_phase"]

_MAX_QUBITS = 4


def block_unitary(instructions: Sequence[Instruction], qubits: Sequence[Register] | None = None) -> np.ndarray:
    """Ordered product of gate unitaries; the first qubit is the most significant.

    Qubit operands are matched by register, so the block must not reassign its
    qubit registers (pure gate blocks never do).
    """
    instructions = list(instructions)
    for ins in instructions:
        if ins.opcode.group not in ("gate1", "gate2"):
            raise NotAGateBlock(f"{ins.mnemonic} is not a gate")
    if qubits is None:
        qubits = []
        for ins in instructions:
            for op in ins.operands:
                if isinstance(op, Register) and op not in qubits:
                    qubits.append(op)
    qubits = list(qubits)
    if len(qubits) > _MAX_QUBITS:
        raise NotAGateBlock(f"block acts on {len(qubits)} qubits; at most {_MAX_QUBITS} supported")
    k = len(qubits)
    u = np.eye(2**k, dtype=complex)
    for ins in instructions:
        regs = [op for op in ins.operands if isinstance(op, Register)]
        angle = None
        if ins.mnemonic.startswith("rot_") or ins.mnemonic.endswith("_dir"):
            angle = angle_value(AngleSpec(ins.operands[-2], ins.operands[-1]))
        try:
            pos = [qubits.index(r) for r in regs]
        except ValueError:
            raise NotAGateBlock(f"{ins} acts outside the given qubits") from None
        u = _embed(gate_matrix(ins.mnemonic, angle), k, pos) @ u
    return u


def _embed(op: np.ndarray, k: int, pos: list[int]) -> np.ndarray:
    m = len(pos)
    t = op.reshape([2] * (2 * m))
    eye = np.eye(2**k, dtype=complex).reshape([2] * (2 * k))
    # contract op's input legs with the identity's output legs at pos
    out = np.tensordot(t, eye, axes=(list(range(m, 2 * m)), pos))
    rest = [i for i in range(k) if i not in pos]
    # current axis order: pos outputs, remaining output legs, then input legs
    order = [None] * k
    for n, p in enumerate(pos):
        order[p] = n
    for n, r in enumerate(rest):
        order[r] = m + n
    out = np.transpose(out, order + list(range(k, 2 * k)))
    return out.reshape(2**k, 2**k)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when a = e^{i phi} b within max entrywise error ``tol``."""
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < tol:
        return bool(np.max(np.abs(a)) < tol)
    phase = a[idx] / b[idx]
    phase /= abs(phase)
    return bool(np.max(np.abs(a - phase * b)) < tol)
