"""Vanilla -> NV translation with qubit placement and move insertion.

Virtual qubit ids in the vanilla input are treated as logical qubits.  The
translator tracks which NV position (0 = the communication qubit, others =
storage) holds each logical qubit and inserts move composites whenever an
instruction needs its operand on the communication qubit.  Placement persists
across the subroutines of one app, so a :class:`NVCompiler` instance must be
used for all subroutines of that app, in order.

Compiled subroutines address position ``p`` through register ``Q(15 - p)``,
which a short prologue sets up; ``R10`` is used to patch qubit-id arrays
before entanglement requests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..asm import SymbolicSubroutine, SourceMetadata, resolve, to_symbolic
from ..errors import CompileError, NoFreeStorage, PlacementConflict, QubitNotStatic, WrongFlavor
from ..isa import AngleSpec, ArrayEntry, Flavor, Instruction, Label, Register, RegName, Subroutine, lookup
from .analysis import ConstState, is_barrier, propagate, qubit_registers, written_registers
from .mappings import (
    MOVE_TO_COMM,
    MOVE_TO_COMM_ADHOC,
    MOVE_TO_STORAGE,
    MOVE_TO_STORAGE_ADHOC,
    ONE_QUBIT,
    TWO_QUBIT,
)
from .unit_module import UnitModule
from .validate import Diagnostic, errors_in, validate

__all__ = [
    "PassOptions",
    "MODES",
    "CompileResult",
    "Placement",
    "NVCompiler",
    "position_register",
    "translate_vanilla_to_nv",
    "insert_moves_nv",
    "reorder_commuting_measurements",
]

PATCH_REGISTER = Register(RegName.R, 10)
_MAX_POSITIONS = 6


def position_register(p: int) -> Register:
    return Register(RegName.Q, 15 - p)


@dataclass(frozen=True)
class PassOptions:
    reorder: bool = True  # hoist measurements of the comm occupant
    peephole: bool = True  # merge/cancel rotations
    defer: bool = True  # apply storage single-qubit gates after the next move to comm
    native_moves: bool = True  # minimal move composite instead of a CNOT pair

    @property
    def label(self) -> str:
        for name, opts in MODES.items():
            if opts == self:
                return name
        return "custom"


MODES = {
    "optimized": PassOptions(),
    "num": PassOptions(reorder=False),
    "adhoc": PassOptions(reorder=False, peephole=False, defer=False, native_moves=False),
}


@dataclass
class Placement:
    pos: dict[int, int] = field(default_factory=dict)  # logical -> position
    allocated: set[int] = field(default_factory=set)  # positions currently qalloc'ed

    def copy(self) -> Placement:
        return Placement(dict(self.pos), set(self.allocated))

    def occupant(self, p: int) -> int | None:
        for logical, q in self.pos.items():
            if q == p:
                return logical
        return None


@dataclass
class CompileResult:
    subroutine: Subroutine
    moves: int
    diagnostics: list[Diagnostic] = field(default_factory=list)
    source: Subroutine | None = None  # vanilla input after reordering

    def counts(self, um: UnitModule):
        from .counts import gate_counts

        return gate_counts(self.subroutine, um, moves=self.moves)


_NV = {m: lookup(m, Flavor.NV) for m in ("init", "rot_x", "rot_y", "rot_z", "cx_dir", "cy_dir")}
_CORE = {m: lookup(m) for m in ("qalloc", "qfree", "meas", "set", "store")}


class _Translator:
    def __init__(self, um: UnitModule, placement: Placement, options: PassOptions, dry: bool = False):
        self.um = um
        self.comm = um.comm
        self.pl = placement
        self.opts = options
        self.dry = dry
        self.out: list = []
        self.buffer: dict[int, list] = {}
        self.moves = 0
        self.snapshots: dict[str, Placement] = {}
        self.comm_before: list[int | None] = []

    # emission -----------------------------------------------------------
    def _emit(self, ins: Instruction) -> None:
        self.out.append(ins)

    def _native(self, mnemonic: str, positions, turns: Fraction) -> None:
        a = AngleSpec.from_turns(turns)
        regs = tuple(position_register(p) for p in positions)
        self._emit(Instruction(_NV[mnemonic], regs + (a.n, a.d)))

    def _gate1(self, logical: int, mnemonic: str, turns: Fraction) -> None:
        if self.opts.defer and self.pl.pos[logical] != self.comm:
            self.buffer.setdefault(logical, []).append((mnemonic, turns))
        else:
            self._native(mnemonic, (self.pl.pos[logical],), turns)

    def _flush(self, logical: int) -> None:
        for mnemonic, turns in self.buffer.pop(logical, ()):
            self._native(mnemonic, (self.pl.pos[logical],), turns)

    def _flush_all(self) -> None:
        for logical in sorted(self.buffer):
            self._flush(logical)

    # placement ----------------------------------------------------------
    def _free_storage(self) -> int:
        for q in self.um.storage_qubits:
            if q not in self.pl.allocated and self.pl.occupant(q) is None:
                return q
        raise NoFreeStorage("no free storage qubit for a move")

    def _composite(self, table, storage: int) -> None:
        roles = {"C": self.comm, "S": storage}
        for mnemonic, rl, turns in table:
            self._native(mnemonic, tuple(roles[r] for r in rl), turns)

    def _move_out(self, logical: int) -> None:
        s = self._free_storage()
        self._flush(logical)
        if s not in self.pl.allocated:
            self._emit(Instruction(_CORE["qalloc"], (position_register(s),)))
        self._emit(Instruction(_NV["init"], (position_register(s),)))
        self._composite(MOVE_TO_STORAGE if self.opts.native_moves else MOVE_TO_STORAGE_ADHOC, s)
        self._emit(Instruction(_CORE["qfree"], (position_register(self.comm),)))
        self.pl.allocated.discard(self.comm)
        self.pl.allocated.add(s)
        self.pl.pos[logical] = s
        self.moves += 1

    def _move_in(self, logical: int) -> None:
        s = self.pl.pos[logical]
        if self.comm not in self.pl.allocated:
            self._emit(Instruction(_CORE["qalloc"], (position_register(self.comm),)))
        self._emit(Instruction(_NV["init"], (position_register(self.comm),)))
        self._composite(MOVE_TO_COMM if self.opts.native_moves else MOVE_TO_COMM_ADHOC, s)
        self._emit(Instruction(_CORE["qfree"], (position_register(s),)))
        self.pl.allocated.discard(s)
        self.pl.allocated.add(self.comm)
        self.pl.pos[logical] = self.comm
        self.moves += 1
        self._flush(logical)

    def _clear_comm(self, keep: int | None = None) -> None:
        r = self.pl.occupant(self.comm)
        if r is not None and r != keep:
            self._move_out(r)

    def _to_comm(self, logical: int) -> None:
        if self.pl.pos[logical] == self.comm:
            return
        self._clear_comm()
        self._move_in(logical)

    # control flow -------------------------------------------------------
    def _check_label(self, name: str, fallthrough: bool) -> None:
        snap = self.snapshots.get(name)
        if snap is None:
            self.snapshots[name] = self.pl.copy()
        elif not fallthrough:
            self.pl = snap.copy()
        elif snap != self.pl:
            raise PlacementConflict(f"qubit placement differs between paths reaching {name}")

    def _check_branch(self, name: str) -> None:
        snap = self.snapshots.get(name)
        if snap is None:
            self.snapshots[name] = self.pl.copy()
        elif snap != self.pl:
            raise PlacementConflict(f"qubit placement differs between paths reaching {name}")

    # main loop ----------------------------------------------------------
    def run(self, sub: Subroutine) -> list:
        states = propagate(sub)
        sym = to_symbolic(sub)
        if not self.dry:
            for p in self.um.ids:
                self._emit(Instruction(_CORE["set"], (position_register(p), p)))
        idx = 0
        fallthrough = True
        for item in sym.items:
            if isinstance(item, Label):
                self._flush_all()
                self._check_label(item.name, fallthrough)
                self.out.append(item)
                fallthrough = True
                continue
            state = states[idx]
            self.comm_before.append(self.pl.occupant(self.comm))
            self._instruction(item, state if state is not None else ConstState(), idx)
            fallthrough = item.mnemonic != "jmp"
            idx += 1
        self._flush_all()
        return self.out

    def _logical(self, state: ConstState, reg: Register, idx: int) -> int:
        v = state.value(reg)
        if v is None:
            raise QubitNotStatic(f"instruction {idx}: qubit register {reg} has no static value")
        return v

    def _placed(self, logical: int, idx: int) -> int:
        if logical not in self.pl.pos:
            raise CompileError(f"instruction {idx}: qubit {logical} is not allocated")
        return self.pl.pos[logical]

    def _instruction(self, ins: Instruction, state: ConstState, idx: int) -> None:
        m, group = ins.mnemonic, ins.opcode.group
        if ins.opcode.flavor is Flavor.NV:
            raise WrongFlavor(f"instruction {idx}: {m} is already NV-flavored")
        qregs = qubit_registers(ins)
        qs = [self._logical(state, r, idx) for r in qregs]

        if m == "qalloc":
            q = qs[0]
            if q in self.pl.pos:
                raise CompileError(f"instruction {idx}: qubit {q} allocated twice")
            if self.pl.occupant(self.comm) is None and self.comm not in self.pl.allocated:
                p = self.comm
            else:
                p = self._free_storage()
            self.pl.pos[q] = p
            self.pl.allocated.add(p)
            self._emit(Instruction(_CORE["qalloc"], (position_register(p),)))
        elif m == "qfree":
            q = qs[0]
            p = self._placed(q, idx)
            self.buffer.pop(q, None)
            del self.pl.pos[q]
            self.pl.allocated.discard(p)
            self._emit(Instruction(_CORE["qfree"], (position_register(p),)))
        elif group == "init":
            p = self._placed(qs[0], idx)
            self.buffer.pop(qs[0], None)
            self._emit(Instruction(_NV["init"], (position_register(p),)))
        elif group == "gate1":
            self._placed(qs[0], idx)
            if m.startswith("rot_"):
                table = [(m, ("q",), AngleSpec(ins.operands[1], ins.operands[2]).turns)]
            else:
                table = ONE_QUBIT[m]
            for mnemonic, _, turns in table:
                self._gate1(qs[0], mnemonic, turns)
        elif group == "gate2":
            a, b = qs
            if a == b:
                raise CompileError(f"instruction {idx}: two-qubit gate on a single qubit")
            self._placed(a, idx)
            self._placed(b, idx)
            if self.comm not in (self.pl.pos[a], self.pl.pos[b]):
                self._to_comm(a)
            on_comm = a if self.pl.pos[a] == self.comm else b
            other = b if on_comm == a else a
            roles = ("C", "S") if on_comm == a else ("S", "C")
            table = TWO_QUBIT[(m, *roles)]
            logical = {"C": on_comm, "S": other}
            for mnemonic, rl, turns in table:
                if len(rl) == 1:
                    self._gate1(logical[rl[0]], mnemonic, turns)
                else:
                    self._flush(on_comm)
                    self._flush(other)
                    self._native(mnemonic, (self.comm, self.pl.pos[other]), turns)
        elif m == "meas":
            q = qs[0]
            self._placed(q, idx)
            self._to_comm(q)
            self._flush(q)
            self._emit(Instruction(_CORE["meas"], (position_register(self.comm), ins.operands[1])))
        elif group == "epr":
            self._flush_all()
            self._entangle(ins, state, idx)
        else:
            if is_barrier(ins) or group == "return":
                self._flush_all()
            if group == "branch":
                from ..isa import branch_target_slot

                self._check_branch(ins.operands[branch_target_slot(ins.opcode)].name)
            self._emit(ins)

    def _entangle(self, ins: Instruction, state: ConstState, idx: int) -> None:
        qaddr = state.value(ins.operands[2])
        if qaddr is None:
            raise QubitNotStatic(f"instruction {idx}: qubit-id array address is not static")
        if ins.mnemonic == "create_epr":
            args = state.value(ins.operands[3])
            etype = state.mem.get((args, 0), 0) if args is not None else 0
            pairs = state.mem.get((args, 1), 1) if args is not None else 1
            if etype == 1:  # measure-directly pairs never occupy a qubit
                self._emit(ins)
                return
            if pairs != 1:
                raise CompileError(f"instruction {idx}: NV nodes deliver one pair per request")
        logical = state.mem.get((qaddr, 0))
        if logical is None:
            raise QubitNotStatic(f"instruction {idx}: qubit id for the pair is not static")
        if logical in self.pl.pos:
            raise CompileError(f"instruction {idx}: qubit {logical} is already in use")
        self._clear_comm()
        if self.comm in self.pl.allocated:
            raise CompileError(f"instruction {idx}: communication qubit is busy")
        self._emit(Instruction(_CORE["set"], (PATCH_REGISTER, 0)))
        self._emit(Instruction(_CORE["store"], (position_register(self.comm), ArrayEntry(qaddr, PATCH_REGISTER))))
        self._emit(ins)
        self.pl.pos[logical] = self.comm
        self.pl.allocated.add(self.comm)


def _reserved_writes(sub: Subroutine, um: UnitModule) -> list[Diagnostic]:
    reserved = {position_register(p) for p in um.ids} | {PATCH_REGISTER}
    out = []
    for i, ins in enumerate(sub.instructions):
        hit = written_registers(ins) & reserved
        if hit:
            out.append(Diagnostic("error", i, "ReservedRegister", f"{sorted(map(str, hit))} reserved by the NV compiler"))
    return out


def reorder_commuting_measurements(sub: Subroutine, um: UnitModule, placement: Placement | None = None) -> Subroutine:
    """Hoist the measurement of the comm-qubit occupant ahead of a measurement
    that would otherwise force it off the comm qubit.

    Only straight-line stretches are touched; the hoisted measurement (and a
    directly following ``qfree`` of the same qubit) moves past instructions that
    neither act on its qubit nor touch its outcome register.
    """
    placement = placement or Placement()
    for _ in range(len(sub.instructions)):
        changed = _reorder_once(sub, um, placement)
        if changed is None:
            return sub
        sub = changed
    return sub


def _reorder_once(sub: Subroutine, um: UnitModule, placement: Placement) -> Subroutine | None:
    tr = _Translator(um, placement.copy(), MODES["num"], dry=True)
    try:
        tr.run(sub)
    except CompileError:
        return None
    states = propagate(sub)
    ins_list = list(sub.instructions)
    targets = {
        ins.operands[slot]
        for ins in ins_list
        if (slot := _target_slot(ins)) is not None
    }

    def qubits_of(k):
        regs = qubit_registers(ins_list[k])
        if not regs:
            return set()
        st = states[k]
        vals = {st.value(r) for r in regs} if st is not None else {None}
        return vals

    for i, ins in enumerate(ins_list):
        if ins.mnemonic != "meas" or states[i] is None:
            continue
        a = states[i].value(ins.operands[0])
        b = tr.comm_before[i]
        if a is None or b is None or a == b:
            continue
        j = next((k for k in range(i + 1, len(ins_list)) if b in qubits_of(k) or None in qubits_of(k)), None)
        if j is None or ins_list[j].mnemonic != "meas" or states[j].value(ins_list[j].operands[0]) != b:
            continue
        if any(k in targets for k in range(i + 1, j + 1)):
            continue
        mb = ins_list[j].operands[1]
        blocked = False
        for k in range(i, j):
            other = ins_list[k]
            if is_barrier(other) or other.opcode.group == "return":
                blocked = True
            elif mb in written_registers(other) or mb in _reads(other):
                blocked = True
            if blocked:
                break
        if blocked:
            continue
        unit = [j]
        nxt = j + 1
        if (
            nxt < len(ins_list)
            and ins_list[nxt].mnemonic == "qfree"
            and states[nxt] is not None
            and states[nxt].value(ins_list[nxt].operands[0]) == b
            and nxt not in targets
        ):
            unit.append(nxt)
        moved = [ins_list[k] for k in unit]
        rest = [x for k, x in enumerate(ins_list) if k not in unit]
        new = rest[:i] + moved + rest[i:]
        return sub.replace(new)
    return None


def _target_slot(ins: Instruction):
    from ..isa import branch_target_slot

    return branch_target_slot(ins.opcode)


def _reads(ins: Instruction) -> set[Register]:
    from .analysis import read_registers

    return read_registers(ins)


class NVCompiler:
    """Stateful vanilla -> NV compiler for the subroutines of one application."""

    def __init__(self, um: UnitModule, mode: str | PassOptions = "optimized"):
        if not um.is_nv:
            raise CompileError("NV compilation needs an NV unit module")
        if len(um.ids) > _MAX_POSITIONS:
            raise CompileError(f"NV compilation supports at most {_MAX_POSITIONS} qubits")
        self.um = um
        self.options = MODES[mode] if isinstance(mode, str) else mode
        self.placement = Placement()

    def compile(self, sub: Subroutine) -> CompileResult:
        flavor = sub.flavor
        if flavor is Flavor.NV:
            diags = validate(sub, self.um, strict=True)
            if errors_in(diags):
                raise CompileError(str(errors_in(diags)[0]))
            return CompileResult(sub, 0, diags, sub)
        diags = _reserved_writes(sub, self.um)
        if errors_in(diags):
            raise CompileError(str(diags[0]))
        if self.options.reorder:
            sub = reorder_commuting_measurements(sub, self.um, self.placement)
        tr = _Translator(self.um, self.placement.copy(), self.options)
        items = tr.run(sub)
        meta = SourceMetadata(sub.version, sub.app_id, {}, Flavor.NV)
        out = resolve(SymbolicSubroutine(meta, tuple(items)), lower=False)
        if self.options.peephole:
            from .passes import peephole

            out = peephole(out)
        diags += validate(out, self.um, strict=True)
        if errors_in(diags):
            raise CompileError(str(errors_in(diags)[0]))
        self.placement = tr.pl
        return CompileResult(out, tr.moves, diags, sub)


def translate_vanilla_to_nv(sub: Subroutine, um: UnitModule, mode: str = "optimized") -> Subroutine:
    """One-shot translation of a self-contained subroutine."""
    if sub.flavor is Flavor.NV:
        raise WrongFlavor("input is already NV-flavored")
    return NVCompiler(um, mode).compile(sub).subroutine


def insert_moves_nv(sub: Subroutine, um: UnitModule, mode: str = "optimized") -> CompileResult:
    """Translate and report how many moves placement needed."""
    return NVCompiler(um, mode).compile(sub)
