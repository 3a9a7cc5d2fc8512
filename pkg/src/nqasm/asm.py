"""Text form of the language: preprocessing, parsing, label resolution and printing."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from .errors import (
    AsmError,
    DirectiveOrder,
    DuplicateLabel,
    MissingDirective,
    ResolveError,
    SignatureMismatch,
    UndefinedLabel,
    UndefinedMacro,
    UnknownMnemonic,
    UnknownOpcode,
    UnknownRegisterName,
)
from .isa import (
    Address,
    ArrayEntry,
    ArraySlice,
    Flavor,
    Instruction,
    Label,
    OperandKind,
    Register,
    RegName,
    Subroutine,
    branch_target_slot,
    lookup,
)

__all__ = [
    "SourceMetadata",
    "SymbolicSubroutine",
    "ReservedRegisterWarning",
    "SCRATCH_REGISTERS",
    "preprocess",
    "parse",
    "resolve",
    "assemble",
    "to_text",
    "to_symbolic",
    "lowered_count",
]

INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1

# Registers used by set-lowering, handed out in this order per instruction.
SCRATCH_REGISTERS = tuple(Register(RegName.R, i) for i in (15, 14, 13, 12, 11))

_SET = lookup("set")
_LEA = lookup("lea")


class ReservedRegisterWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SourceMetadata:
    version: tuple[int, int] = (1, 0)
    app_id: int = 0
    defines: dict = field(default_factory=dict, compare=False)
    flavor: Flavor = Flavor.VANILLA
    # original source line number for each body line
    line_map: tuple[int, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class SymbolicSubroutine:
    metadata: SourceMetadata
    items: tuple  # Label markers and Instructions, in order

    @property
    def instructions(self) -> list[Instruction]:
        return [it for it in self.items if isinstance(it, Instruction)]


_MACRO = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)")


def _strip_comment(line: str) -> str:
    pos = line.find("//")
    return line if pos < 0 else line[:pos]


def preprocess(source: str, defines: dict | None = None) -> tuple[SourceMetadata, str]:
    """Consume ``#`` directives, expand ``$`` macros and drop comments/blank lines.

    ``defines`` overrides DEFINE directives of the same name, which lets a
    driver reuse one listing with different parameters.
    """
    overrides = {k: str(v) for k, v in (defines or {}).items()}
    version = app_id = None
    defines = {}
    flavor = Flavor.VANILLA
    body: list[str] = []
    line_map: list[int] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("#"):
            if body:
                raise DirectiveOrder("directive after the first body command", lineno)
            parts = line[1:].strip().split(None, 1)
            if not parts:
                raise AsmError("empty directive", lineno)
            key = parts[0].upper()
            arg = parts[1].strip() if len(parts) > 1 else ""
            if key == "NETQASM":
                m = re.fullmatch(r"(\d+)\.(\d+)", arg)
                if not m:
                    raise AsmError(f"bad version {arg!r}", lineno)
                version = (int(m.group(1)), int(m.group(2)))
            elif key == "APPID":
                try:
                    app_id = int(arg)
                except ValueError:
                    raise AsmError(f"bad app id {arg!r}", lineno) from None
            elif key == "DEFINE":
                dparts = arg.split(None, 1)
                if len(dparts) != 2:
                    raise AsmError("DEFINE needs a key and a value", lineno)
                name, value = dparts[0], dparts[1].strip()
                if value.startswith("{") and value.endswith("}"):
                    value = value[1:-1].strip()
                defines[name] = value
            elif key == "FLAVOR":
                try:
                    flavor = Flavor(arg.lower())
                except ValueError:
                    raise AsmError(f"unknown flavor {arg!r}", lineno) from None
            else:
                raise AsmError(f"unknown directive {key!r}", lineno)
            continue

        def expand(m: re.Match) -> str:
            if m.group(1) in overrides:
                return overrides[m.group(1)]
            try:
                return defines[m.group(1)]
            except KeyError:
                raise UndefinedMacro(f"${m.group(1)} is not defined", lineno) from None

        body.append(_MACRO.sub(expand, line))
        line_map.append(lineno)

    if version is None:
        raise MissingDirective("missing # NETQASM directive")
    if app_id is None:
        raise MissingDirective("missing # APPID directive")
    meta = SourceMetadata(version, app_id, {**defines, **overrides}, flavor, tuple(line_map))
    return meta, "\n".join(body)


_INT = re.compile(r"-?\d+")
_REG = re.compile(r"([A-Za-z])(\d+)")
_ADDR = re.compile(r"@(\d+)")
_INDEXED = re.compile(r"@(\d+)\[([^\]]*)\]")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _parse_register(tok: str, line: int) -> Register:
    m = _REG.fullmatch(tok)
    if m.group(1) not in RegName.__members__:
        raise UnknownRegisterName(f"unknown register name in {tok!r}", line)
    idx = int(m.group(2))
    if idx >= 16:
        raise SignatureMismatch(f"register index out of range in {tok!r}", line)
    return Register(RegName[m.group(1)], idx)


def _parse_int(tok: str, line: int) -> int:
    v = int(tok)
    if not INT32_MIN <= v <= INT32_MAX:
        raise SignatureMismatch(f"immediate {v} does not fit in int32", line)
    return v


def _parse_index(tok: str, line: int):
    tok = tok.strip()
    if _INT.fullmatch(tok):
        return _parse_int(tok, line)
    if _REG.fullmatch(tok):
        return _parse_register(tok, line)
    raise SignatureMismatch(f"bad array index {tok!r}", line)


def _parse_operand(tok: str, line: int):
    if _INT.fullmatch(tok):
        return _parse_int(tok, line)
    if _REG.fullmatch(tok):
        return _parse_register(tok, line)
    m = _ADDR.fullmatch(tok)
    if m:
        return Address(int(m.group(1)))
    m = _INDEXED.fullmatch(tok)
    if m:
        addr, inner = int(m.group(1)), m.group(2)
        if ":" in inner:
            start, stop = inner.split(":", 1)
            return ArraySlice(addr, _parse_index(start, line), _parse_index(stop, line))
        return ArrayEntry(addr, _parse_index(inner, line))
    if _IDENT.fullmatch(tok):
        return Label(tok)
    raise SignatureMismatch(f"cannot parse operand {tok!r}", line)


def _fits(kind: OperandKind, value, is_target: bool) -> bool:
    if kind is OperandKind.REGISTER:
        return isinstance(value, (Register, int, Address))
    if kind is OperandKind.IMMEDIATE:
        return isinstance(value, int) or (is_target and isinstance(value, Label))
    if kind is OperandKind.ADDRESS:
        return isinstance(value, Address)
    if kind is OperandKind.ARRAY_ENTRY:
        return isinstance(value, ArrayEntry)
    return isinstance(value, ArraySlice)


def parse(body: str, metadata: SourceMetadata | None = None, flavor: Flavor | None = None) -> SymbolicSubroutine:
    """Parse a preprocessed body into labels and symbolic instructions."""
    metadata = metadata or SourceMetadata()
    flavor = flavor or metadata.flavor
    items: list = []
    seen: set[str] = set()
    lines = body.splitlines()
    for i, text in enumerate(lines):
        line = metadata.line_map[i] if i < len(metadata.line_map) else i + 1
        text = text.strip()
        while True:
            m = re.match(r"([A-Za-z_][A-Za-z0-9_]*):\s*", text)
            if not m:
                break
            name = m.group(1)
            if name in seen:
                raise DuplicateLabel(f"label {name} defined twice", line)
            seen.add(name)
            items.append(Label(name))
            text = text[m.end():]
        if not text:
            continue
        mnemonic, *tokens = text.split()
        try:
            op = lookup(mnemonic, flavor)
        except UnknownOpcode:
            raise UnknownMnemonic(f"unknown mnemonic {mnemonic!r}", line) from None
        if len(tokens) != len(op.signature):
            raise SignatureMismatch(
                f"{mnemonic} takes {len(op.signature)} operands, got {len(tokens)}", line
            )
        target = branch_target_slot(op)
        operands = []
        for slot, (kind, tok) in enumerate(zip(op.signature, tokens)):
            value = _parse_operand(tok, line)
            if not _fits(kind, value, slot == target):
                raise SignatureMismatch(f"operand {slot} of {mnemonic} must be {kind.value}, got {tok!r}", line)
            operands.append(value)
        items.append(Instruction(op, tuple(operands)))
    return SymbolicSubroutine(metadata, tuple(items))


def _registers_in(ins: Instruction):
    for o in ins.operands:
        if isinstance(o, Register):
            yield o
        elif isinstance(o, ArrayEntry) and isinstance(o.index, Register):
            yield o.index
        elif isinstance(o, ArraySlice):
            for r in (o.start, o.stop):
                if isinstance(r, Register):
                    yield r


def _lower(ins: Instruction) -> tuple[list[Instruction], Instruction]:
    """Replace immediates in register positions by scratch registers."""
    pool = iter(SCRATCH_REGISTERS)
    prefix: list[Instruction] = []

    def scratch_set(value) -> Register:
        reg = next(pool)
        if isinstance(value, Address):
            prefix.append(Instruction(_LEA, (reg, value)))
        else:
            prefix.append(Instruction(_SET, (reg, value)))
        return reg

    new_ops = []
    for kind, value in zip(ins.opcode.signature, ins.operands):
        if kind is OperandKind.REGISTER and not isinstance(value, Register):
            value = scratch_set(value)
        elif kind is OperandKind.ARRAY_ENTRY and isinstance(value.index, int):
            value = ArrayEntry(value.address, scratch_set(value.index))
        elif kind is OperandKind.ARRAY_SLICE:
            start, stop = value.start, value.stop
            if isinstance(start, int):
                start = scratch_set(start)
            if isinstance(stop, int):
                stop = scratch_set(stop)
            value = ArraySlice(value.address, start, stop)
        new_ops.append(value)
    return prefix, Instruction(ins.opcode, tuple(new_ops))


def to_symbolic(sub: Subroutine) -> SymbolicSubroutine:
    """Turn numeric branch targets back into labels (``_L<index>``)."""
    targets = set()
    for ins in sub.instructions:
        slot = branch_target_slot(ins.opcode)
        if slot is not None and isinstance(ins.operands[slot], int):
            targets.add(ins.operands[slot])
    items: list = []
    for i, ins in enumerate(sub.instructions):
        if i in targets:
            items.append(Label(f"_L{i}"))
        slot = branch_target_slot(ins.opcode)
        if slot is not None and isinstance(ins.operands[slot], int):
            ops = list(ins.operands)
            ops[slot] = Label(f"_L{ops[slot]}")
            ins = Instruction(ins.opcode, tuple(ops))
        items.append(ins)
    n = len(sub.instructions)
    if n in targets:
        items.append(Label(f"_L{n}"))
    flavor = sub.flavor or Flavor.VANILLA
    return SymbolicSubroutine(SourceMetadata(sub.version, sub.app_id, {}, flavor), tuple(items))


def resolve(sym: SymbolicSubroutine | Subroutine, *, lower: bool = True) -> Subroutine:
    """Replace labels by instruction indices, optionally after set-lowering.

    With ``lower=False`` only labels are resolved, which reproduces hand-written
    listings; the result may still hold immediates in register positions and is
    then rejected by the binary encoder.
    """
    if isinstance(sym, Subroutine):
        sym = to_symbolic(sym)
    out: list[Instruction] = []
    positions: dict[str, int] = {}
    used_scratch: set[Register] = set()
    user_regs: set[Register] = set()
    for item in sym.items:
        if isinstance(item, Label):
            positions[item.name] = len(out)
            continue
        user_regs.update(_registers_in(item))
        if lower:
            prefix, item = _lower(item)
            for p in prefix:
                used_scratch.add(p.operands[0])
            out.extend(prefix)
        out.append(item)

    clash = used_scratch & user_regs
    if clash:
        names = ", ".join(sorted(map(str, clash)))
        warnings.warn(f"set-lowering reuses registers also used by the program: {names}", ReservedRegisterWarning, stacklevel=2)

    count = len(out)
    final = []
    for ins in out:
        slot = branch_target_slot(ins.opcode)
        if slot is not None and isinstance(ins.operands[slot], Label):
            name = ins.operands[slot].name
            if name not in positions:
                raise UndefinedLabel(f"label {name} is not defined")
            ops = list(ins.operands)
            ops[slot] = positions[name]
            ins = Instruction(ins.opcode, tuple(ops))
        if slot is not None and not 0 <= ins.operands[slot] <= count:
            raise ResolveError(f"branch target {ins.operands[slot]} outside [0, {count}]")
        final.append(ins)
    return Subroutine(sym.metadata.version, sym.metadata.app_id, tuple(final))


def lowered_count(sym: SymbolicSubroutine) -> int:
    """Number of instructions set-lowering inserts for ``sym``."""
    return sum(len(_lower(ins)[0]) for ins in sym.instructions)


def assemble(source: str, *, flavor: Flavor | None = None, lower: bool = True, defines: dict | None = None) -> Subroutine:
    meta, body = preprocess(source, defines)
    return resolve(parse(body, meta, flavor), lower=lower)


def to_text(sub: Subroutine | SymbolicSubroutine) -> str:
    """Canonical text: header directives then one instruction per line."""
    if isinstance(sub, SymbolicSubroutine):
        version, app_id, items = sub.metadata.version, sub.metadata.app_id, sub.items
        flavor = Subroutine(instructions=tuple(sub.instructions)).flavor
    else:
        version, app_id, items = sub.version, sub.app_id, sub.instructions
        flavor = sub.flavor
    lines = [f"# NETQASM {version[0]}.{version[1]}", f"# APPID {app_id}"]
    if flavor is Flavor.NV:
        lines.append("# FLAVOR nv")
    for item in items:
        lines.append(f"{item}:" if isinstance(item, Label) else str(item))
    return "\n".join(lines) + "\n"
