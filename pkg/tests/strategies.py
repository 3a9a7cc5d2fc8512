"""Random valid (lowered, resolved) subroutines for round-trip tests."""

import numpy as np
from hypothesis import strategies as st

from nqasm.isa import (
    MAX_ANGLE_D,
    OPCODES,
    Address,
    ArrayEntry,
    ArraySlice,
    Flavor,
    Instruction,
    OperandKind,
    Register,
    RegName,
    Subroutine,
    branch_target_slot,
)

INT32 = (-(2**31), 2**31 - 1)

_BY_FLAVOR = {
    f: [op for op in OPCODES.values() if op.flavor in (Flavor.CORE, f)] for f in (Flavor.VANILLA, Flavor.NV)
}


def _angle_slots(op):
    # rot_* (R, I, I) and cx/cy_dir (R, R, I, I): the last immediate is d
    return {len(op.signature) - 1} if op.group in ("gate1", "gate2") and op.signature[-1] is OperandKind.IMMEDIATE else set()


def build(draw_int, length: int) -> Subroutine:
    """Assemble a subroutine from ``draw_int(lo, hi)`` choices (inclusive bounds)."""
    flavor = (Flavor.VANILLA, Flavor.NV)[draw_int(0, 1)]
    ops = _BY_FLAVOR[flavor]

    def reg():
        return Register(RegName(draw_int(0, 3)), draw_int(0, 15))

    def address():
        return draw_int(0, 2**31 - 1) if draw_int(0, 9) == 0 else draw_int(0, 64)

    instructions = []
    for _ in range(length):
        op = ops[draw_int(0, len(ops) - 1)]
        target = branch_target_slot(op)
        angle = _angle_slots(op)
        operands = []
        for slot, kind in enumerate(op.signature):
            if kind is OperandKind.REGISTER:
                operands.append(reg())
            elif kind is OperandKind.IMMEDIATE:
                if slot == target:
                    operands.append(draw_int(0, length))
                elif slot in angle:
                    operands.append(draw_int(0, MAX_ANGLE_D))
                elif op.mnemonic == "array":
                    operands.append(draw_int(1, 1000))
                else:
                    operands.append(draw_int(*INT32))
            elif kind is OperandKind.ADDRESS:
                operands.append(Address(address()))
            elif kind is OperandKind.ARRAY_ENTRY:
                operands.append(ArrayEntry(address(), reg()))
            else:
                operands.append(ArraySlice(address(), reg(), reg()))
        instructions.append(Instruction(op, tuple(operands)))
    return Subroutine((1, draw_int(0, 255)), draw_int(0, 2**31 - 1), tuple(instructions))


def numpy_subroutine(rng: np.random.Generator, max_len: int = 30) -> Subroutine:
    def draw_int(lo, hi):
        return int(rng.integers(lo, hi, endpoint=True))

    return build(draw_int, int(rng.integers(0, max_len, endpoint=True)))


@st.composite
def subroutines(draw, max_len: int = 20):
    length = draw(st.integers(0, max_len))
    return build(lambda lo, hi: draw(st.integers(lo, hi)), length)
