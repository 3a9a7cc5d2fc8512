"""Binary form of subroutines.

Layout (little-endian)::

    header  b"NQSM" | major u8 | minor u8 | app_id i32 | count u32
    body    per instruction: opcode u8, then per operand kind
            REGISTER     1 byte  (name << 4 | index)
            IMMEDIATE    i32
            ADDRESS      i32
            ARRAY_ENTRY  i32 address + 1 register byte
            ARRAY_SLICE  i32 address + 2 register bytes
"""

from __future__ import annotations

import struct

from .errors import BadMagic, NotLowered, TrailingBytes, Truncated, UnknownOpcode, UnsupportedVersion
from .isa import OPCODES, Address, ArrayEntry, ArraySlice, Instruction, OperandKind, Register, Subroutine

__all__ = ["MAGIC", "SUPPORTED_MAJOR", "encode", "decode", "encode_register", "decode_register", "operand_width"]

MAGIC = b"NQSM"
SUPPORTED_MAJOR = 1
_HEADER = struct.Struct("<4sBBiI")
_I32 = struct.Struct("<i")

_WIDTH = {
    OperandKind.REGISTER: 1,
    OperandKind.IMMEDIATE: 4,
    OperandKind.ADDRESS: 4,
    OperandKind.ARRAY_ENTRY: 5,
    OperandKind.ARRAY_SLICE: 6,
}


def operand_width(kind: OperandKind) -> int:
    return _WIDTH[kind]


def encode_register(reg: Register) -> bytes:
    return bytes([reg.to_byte()])


def decode_register(data: bytes) -> Register:
    return Register.from_byte(data[0])


def _reg(value, ins: Instruction, where: str) -> int:
    if not isinstance(value, Register):
        raise NotLowered(f"{ins}: {where} is {value!r}, expected a register")
    return value.to_byte()


def _i32(value, ins: Instruction) -> bytes:
    if not isinstance(value, int) or isinstance(value, bool):
        raise NotLowered(f"{ins}: unresolved operand {value!r}")
    try:
        return _I32.pack(value)
    except struct.error:
        raise NotLowered(f"{ins}: immediate {value} out of int32 range") from None


def encode(sub: Subroutine) -> bytes:
    out = bytearray(_HEADER.pack(MAGIC, sub.version[0], sub.version[1], sub.app_id, len(sub.instructions)))
    for ins in sub.instructions:
        out.append(ins.opcode.code)
        for kind, value in zip(ins.opcode.signature, ins.operands):
            if kind is OperandKind.REGISTER:
                out.append(_reg(value, ins, "operand"))
            elif kind is OperandKind.IMMEDIATE:
                out += _i32(value, ins)
            elif kind is OperandKind.ADDRESS:
                if not isinstance(value, Address):
                    raise NotLowered(f"{ins}: expected an address, got {value!r}")
                out += _i32(value.address, ins)
            elif kind is OperandKind.ARRAY_ENTRY:
                if not isinstance(value, ArrayEntry):
                    raise NotLowered(f"{ins}: expected an array entry, got {value!r}")
                out += _i32(value.address, ins)
                out.append(_reg(value.index, ins, "array index"))
            else:
                if not isinstance(value, ArraySlice):
                    raise NotLowered(f"{ins}: expected an array slice, got {value!r}")
                out += _i32(value.address, ins)
                out.append(_reg(value.start, ins, "slice start"))
                out.append(_reg(value.stop, ins, "slice stop"))
    return bytes(out)


def decode(data: bytes) -> Subroutine:
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}", 0)
    if len(data) < _HEADER.size:
        raise Truncated("header truncated", len(data))
    _, major, minor, app_id, count = _HEADER.unpack_from(data)
    if major != SUPPORTED_MAJOR:
        raise UnsupportedVersion(f"unsupported major version {major}", 4)

    pos = _HEADER.size
    n = len(data)

    def need(k: int):
        if pos + k > n:
            raise Truncated("operand truncated", pos)

    def read_reg() -> Register:
        nonlocal pos
        need(1)
        try:
            reg = Register.from_byte(data[pos])
        except ValueError:
            raise Truncated(f"invalid register byte 0x{data[pos]:02x}", pos) from None
        pos += 1
        return reg

    def read_i32() -> int:
        nonlocal pos
        need(4)
        (v,) = _I32.unpack_from(data, pos)
        pos += 4
        return v

    instructions = []
    for _ in range(count):
        if pos >= n:
            raise Truncated("instruction missing", pos)
        code = data[pos]
        op = OPCODES.get(code)
        if op is None:
            raise UnknownOpcode(code, pos)
        pos += 1
        ops = []
        for kind in op.signature:
            if kind is OperandKind.REGISTER:
                ops.append(read_reg())
            elif kind is OperandKind.IMMEDIATE:
                ops.append(read_i32())
            elif kind is OperandKind.ADDRESS:
                ops.append(Address(read_i32()))
            elif kind is OperandKind.ARRAY_ENTRY:
                addr = read_i32()
                ops.append(ArrayEntry(addr, read_reg()))
            else:
                addr = read_i32()
                start = read_reg()
                ops.append(ArraySlice(addr, start, read_reg()))
        instructions.append(Instruction(op, tuple(ops)))
    if pos != n:
        raise TrailingBytes(f"{n - pos} trailing bytes", pos)
    return Subroutine((major, minor), app_id, tuple(instructions))
