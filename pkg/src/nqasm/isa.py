"""Opcode registry, operand kinds and instruction containers.

Everything that needs to know what an instruction looks like (the assembler,
the binary codec, the compiler and the QNPU) reads it from here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import AngleOverflow, UnknownOpcode

__all__ = [
    "OperandKind",
    "RegName",
    "Register",
    "Address",
    "ArrayEntry",
    "ArraySlice",
    "Label",
    "Flavor",
    "Opcode",
    "Instruction",
    "Subroutine",
    "AngleSpec",
    "OPCODES",
    "lookup",
    "opcode",
    "signature",
    "flavor_of",
    "angle_value",
    "branch_target_slot",
    "isa_table",
]

MAX_ANGLE_D = 30
NUM_REGISTERS = 16


class OperandKind(enum.Enum):
    IMMEDIATE = "IMMEDIATE"
    REGISTER = "REGISTER"
    ADDRESS = "ADDRESS"
    ARRAY_ENTRY = "ARRAY_ENTRY"
    ARRAY_SLICE = "ARRAY_SLICE"


class RegName(enum.IntEnum):
    C = 0
    R = 1
    Q = 2
    M = 3


@dataclass(frozen=True, order=True)
class Register:
    name: RegName
    index: int

    def __post_init__(self):
        if not isinstance(self.name, RegName):
            object.__setattr__(self, "name", RegName[self.name] if isinstance(self.name, str) else RegName(self.name))
        if not 0 <= self.index < NUM_REGISTERS:
            raise ValueError(f"register index {self.index} out of range")

    def __str__(self) -> str:
        return f"{self.name.name}{self.index}"

    def to_byte(self) -> int:
        return (int(self.name) << 4) | self.index

    @classmethod
    def from_byte(cls, value: int) -> Register:
        return cls(RegName(value >> 4), value & 0x0F)

    @classmethod
    def parse(cls, text: str) -> Register:
        return cls(RegName[text[0]], int(text[1:]))


@dataclass(frozen=True)
class Address:
    address: int

    def __str__(self) -> str:
        return f"@{self.address}"


@dataclass(frozen=True)
class ArrayEntry:
    """``@a[i]``; the index is a Register once lowered, an int in source form."""

    address: int
    index: Register | int

    def __str__(self) -> str:
        return f"@{self.address}[{self.index}]"


@dataclass(frozen=True)
class ArraySlice:
    address: int
    start: Register | int
    stop: Register | int

    def __str__(self) -> str:
        return f"@{self.address}[{self.start}:{self.stop}]"


@dataclass(frozen=True)
class Label:
    """A branch label, both as a position marker and as an operand."""

    name: str

    def __str__(self) -> str:
        return self.name


class Flavor(enum.Enum):
    CORE = "core"
    VANILLA = "vanilla"
    NV = "nv"


_RANGES = {
    Flavor.CORE: range(0x00, 0x30),
    Flavor.VANILLA: range(0x30, 0x60),
    Flavor.NV: range(0x60, 0x80),
}


@dataclass(frozen=True)
class Opcode:
    code: int
    mnemonic: str
    flavor: Flavor
    signature: tuple[OperandKind, ...]
    group: str

    def __str__(self) -> str:
        return self.mnemonic

    @property
    def is_quantum_gate(self) -> bool:
        return self.group in ("gate1", "gate2", "init")


I, R, A, E, S = (
    OperandKind.IMMEDIATE,
    OperandKind.REGISTER,
    OperandKind.ADDRESS,
    OperandKind.ARRAY_ENTRY,
    OperandKind.ARRAY_SLICE,
)

_CORE = [
    # classical
    ("add", (R, R, R), "classical"),
    ("sub", (R, R, R), "classical"),
    ("addm", (R, R, R, R), "classical"),
    ("subm", (R, R, R, R), "classical"),
    # branching
    ("jmp", (I,), "branch"),
    ("bez", (R, I), "branch"),
    ("bnz", (R, I), "branch"),
    ("beq", (R, R, I), "branch"),
    ("bne", (R, R, I), "branch"),
    ("blt", (R, R, I), "branch"),
    ("bge", (R, R, I), "branch"),
    # memory
    ("set", (R, I), "memory"),
    ("store", (R, E), "memory"),
    ("load", (R, E), "memory"),
    ("undef", (E,), "memory"),
    ("lea", (R, A), "memory"),
    # allocation
    ("array", (I, A), "alloc"),
    ("qalloc", (R,), "alloc"),
    ("qfree", (R,), "alloc"),
    # waiting
    ("wait_all", (S,), "wait"),
    ("wait_any", (S,), "wait"),
    ("wait_single", (E,), "wait"),
    # returning
    ("ret_reg", (R,), "return"),
    ("ret_arr", (A,), "return"),
    # measurement
    ("meas", (R, R), "meas"),
    ("pmr_xyx", (I,) * 6, "pmr"),
    ("pmr_zxz", (I,) * 6, "pmr"),
    ("pmr_yzy", (I,) * 6, "pmr"),
    # entanglement
    ("create_epr", (R,) * 5, "epr"),
    ("recv_epr", (R,) * 4, "epr"),
]

_VANILLA = [
    ("init", (R,), "init"),
    ("x", (R,), "gate1"),
    ("y", (R,), "gate1"),
    ("z", (R,), "gate1"),
    ("h", (R,), "gate1"),
    ("s", (R,), "gate1"),
    ("k", (R,), "gate1"),
    ("t", (R,), "gate1"),
    ("rot_x", (R, I, I), "gate1"),
    ("rot_y", (R, I, I), "gate1"),
    ("rot_z", (R, I, I), "gate1"),
    ("cnot", (R, R), "gate2"),
    ("cphase", (R, R), "gate2"),
]

_NV = [
    ("init", (R,), "init"),
    ("rot_x", (R, I, I), "gate1"),
    ("rot_y", (R, I, I), "gate1"),
    ("rot_z", (R, I, I), "gate1"),
    ("cx_dir", (R, R, I, I), "gate2"),
    ("cy_dir", (R, R, I, I), "gate2"),
]


def _build() -> dict[int, Opcode]:
    table: dict[int, Opcode] = {}
    for flavor, entries in ((Flavor.CORE, _CORE), (Flavor.VANILLA, _VANILLA), (Flavor.NV, _NV)):
        base = _RANGES[flavor].start
        for i, (mnemonic, sig, group) in enumerate(entries):
            code = base + i
            assert code in _RANGES[flavor]
            table[code] = Opcode(code, mnemonic, flavor, sig, group)
    return table


OPCODES: dict[int, Opcode] = _build()
_BY_NAME: dict[tuple[Flavor, str], Opcode] = {(op.flavor, op.mnemonic): op for op in OPCODES.values()}

# Branch target operand position per branch mnemonic.
_TARGET_SLOT = {"jmp": 0, "bez": 1, "bnz": 1, "beq": 2, "bne": 2, "blt": 2, "bge": 2}


def opcode(code: int) -> Opcode:
    try:
        return OPCODES[code]
    except KeyError:
        raise UnknownOpcode(code) from None


def lookup(mnemonic: str, flavor: Flavor = Flavor.VANILLA) -> Opcode:
    """Resolve a mnemonic against the core set plus one quantum flavor."""
    op = _BY_NAME.get((Flavor.CORE, mnemonic)) or _BY_NAME.get((flavor, mnemonic))
    if op is None:
        raise UnknownOpcode(mnemonic)
    return op


def signature(op: Opcode | int) -> tuple[OperandKind, ...]:
    if isinstance(op, int):
        op = opcode(op)
    elif op.code not in OPCODES:
        raise UnknownOpcode(op.code)
    return op.signature


def flavor_of(op: Opcode | int) -> Flavor:
    if isinstance(op, int):
        op = opcode(op)
    for flavor, rng in _RANGES.items():
        if op.code in rng:
            return flavor
    raise UnknownOpcode(op.code)


def branch_target_slot(op: Opcode) -> int | None:
    return _TARGET_SLOT.get(op.mnemonic) if op.flavor is Flavor.CORE else None


@dataclass(frozen=True)
class AngleSpec:
    n: int
    d: int

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("angle exponent d must be non-negative")

    @property
    def turns(self) -> Fraction:
        """The angle as an exact multiple of pi."""
        return Fraction(self.n, 2**self.d)

    @classmethod
    def from_turns(cls, value: Fraction) -> AngleSpec:
        value = Fraction(value)
        d = 0
        den = value.denominator
        while den > 1:
            if den % 2:
                raise ValueError(f"{value} is not a dyadic multiple of pi")
            den //= 2
            d += 1
        if d > MAX_ANGLE_D:
            raise AngleOverflow(f"angle {value}pi needs d={d} > {MAX_ANGLE_D}")
        return cls(value.numerator, d)


def angle_value(spec: AngleSpec) -> float:
    if spec.d > MAX_ANGLE_D:
        raise AngleOverflow(f"d={spec.d} exceeds {MAX_ANGLE_D}")
    return spec.n * math.pi / (1 << spec.d)


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    operands: tuple = ()

    def __post_init__(self):
        if not isinstance(self.operands, tuple):
            object.__setattr__(self, "operands", tuple(self.operands))

    @property
    def mnemonic(self) -> str:
        return self.opcode.mnemonic

    def __str__(self) -> str:
        return " ".join([self.opcode.mnemonic, *map(str, self.operands)])


@dataclass(frozen=True)
class Subroutine:
    version: tuple[int, int] = (1, 0)
    app_id: int = 0
    instructions: tuple[Instruction, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.instructions, tuple):
            object.__setattr__(self, "instructions", tuple(self.instructions))

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def __getitem__(self, i):
        return self.instructions[i]

    @property
    def flavor(self) -> Flavor | None:
        """The quantum flavor used by this subroutine, or None if core-only."""
        flavors = {ins.opcode.flavor for ins in self.instructions} - {Flavor.CORE}
        if len(flavors) > 1:
            raise ValueError("subroutine mixes flavors")
        return flavors.pop() if flavors else None

    def replace(self, instructions) -> Subroutine:
        return Subroutine(self.version, self.app_id, tuple(instructions))


def isa_table() -> str:
    """Human-readable opcode table, one row per opcode."""
    rows = ["| mnemonic | id | flavor | group | signature |", "|---|---|---|---|---|"]
    for code in sorted(OPCODES):
        op = OPCODES[code]
        sig = ", ".join(k.value for k in op.signature)
        rows.append(f"| {op.mnemonic} | 0x{code:02X} | {op.flavor.value} | {op.group} | {sig} |")
    return "\n".join(rows) + "\n"
