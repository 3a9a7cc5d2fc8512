"""One QNPU: app registration, subroutine execution and quantum memory access."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

from ..codec import decode
from ..compiler.nv import NVCompiler
from ..compiler.unit_module import QubitType, UnitModule
from ..config import NodeConfig
from ..errors import (
    BadModulus,
    ExecutionError,
    InvalidBranch,
    NetQASMError,
    NoSuchApp,
    NoSuchQubit,
    QubitBusy,
    QubitNotAllocated,
    WrongFlavor,
)
from ..gates import gate_matrix, rot
from ..host.messages import (
    ERR_RESOURCES,
    ERR_SOCKET,
    Done,
    MemoryUpdate,
    RegisterApp,
    RegisterAppErr,
    RegisterAppOK,
    StopApp,
    SubroutineMsg,
)
from ..isa import AngleSpec, ArrayEntry, Flavor, Instruction, Register, Subroutine, angle_value, branch_target_slot
from ..qsim import QuantumMemory
from ..shmem import SharedMemory, wrap_int32
from .netstack import CK, ENTINFO_WIDTH, EntRequest, EprSocketBinding, Netstack
from .scheduler import Scheduler

__all__ = ["QNPU", "AppContext", "QUBITS_PER_NODE"]

log = logging.getLogger(__name__)

QUBITS_PER_NODE = 64  # stride of global qubit ids in the shared quantum memory
_MD_SCRATCH = 63


@dataclass
class _Run:
    message_id: int
    sub: Subroutine
    pc: int = 0
    blocked: bool = False
    ret_regs: list = field(default_factory=list)
    ret_arrs: list = field(default_factory=list)


@dataclass
class AppContext:
    app_id: int
    physical: list[int]
    um: UnitModule
    shmem: SharedMemory = field(default_factory=SharedMemory)
    sockets: dict[int, EprSocketBinding] = field(default_factory=dict)
    allocated: set[int] = field(default_factory=set)  # virtual ids in use
    pending_pmr: tuple | None = None  # (axes, angles in radians)
    run: _Run | None = None
    translator: NVCompiler | None = None
    draws: dict = field(default_factory=dict)  # measurement key -> occurrences so far

    @property
    def vmap(self) -> dict[int, int]:
        return {v: self.physical[v] for v in sorted(self.allocated)}


class QNPU:
    """Executes subroutines for the apps registered at one node."""

    def __init__(self, config: NodeConfig, scheduler: Scheduler, memory: QuantumMemory, netstack: Netstack):
        self.config = config
        self.node_id = config.id
        self.scheduler = scheduler
        self.memory = memory
        self.netstack = netstack
        self.apps: dict[int, AppContext] = {}
        self.free: list[int] = list(range(config.capacity))
        self._next_app = 0
        self.emit: Callable[[object], None] = lambda msg: None
        self.stats = {"quantum_ops": 0, "two_qubit_ops": 0, "moves": 0, "measurements": 0}
        netstack.attach(self)

    # app bookkeeping ----------------------------------------------------
    def has_app(self, app_id: int) -> bool:
        return app_id in self.apps

    def app(self, app_id: int) -> AppContext:
        try:
            return self.apps[app_id]
        except KeyError:
            raise NoSuchApp(f"no app {app_id} at node {self.config.name}", app_id=app_id) from None

    def global_id(self, ctx: AppContext, vid: int) -> int:
        return self.node_id * QUBITS_PER_NODE + ctx.physical[vid]

    def scratch_qubit(self) -> int:
        return self.node_id * QUBITS_PER_NODE + _MD_SCRATCH

    def physical_qubit(self, app_id: int, vid: int, logical: bool = False) -> int:
        """Global id of an app's qubit; ``logical`` maps through the node's own
        vanilla->NV translation when it did one."""
        ctx = self.app(app_id)
        if logical and ctx.translator is not None:
            vid = ctx.translator.placement.pos[vid]
        if vid not in ctx.allocated:
            raise QubitNotAllocated(f"virtual qubit {vid} is not allocated", app_id=app_id)
        return self.global_id(ctx, vid)

    def unit_module(self, app_id: int) -> UnitModule:
        return self.app(app_id).um

    # protocol -------------------------------------------------------------
    def handle(self, msg) -> None:
        if isinstance(msg, RegisterApp):
            self._register(msg)
        elif isinstance(msg, SubroutineMsg):
            self._start(msg)
        elif isinstance(msg, StopApp):
            self.stop_app(msg.app_id)
        else:
            raise ExecutionError(f"QNPU cannot handle {type(msg).__name__}")

    def _register(self, msg: RegisterApp) -> None:
        physical = self._pick_qubits(msg.num_qubits)
        ids = [s.socket_id for s in msg.epr_sockets]
        known = {n for n in self.netstack.nodes}
        if physical is None:
            self.emit(RegisterAppErr(msg.message_id, ERR_RESOURCES))
            return
        if len(set(ids)) != len(ids) or any(s.remote_node_id not in known or s.remote_node_id == self.node_id for s in msg.epr_sockets):
            self.emit(RegisterAppErr(msg.message_id, ERR_SOCKET))
            return
        for p in physical:
            self.free.remove(p)
        app_id = self._next_app
        self._next_app += 1
        ctx = AppContext(app_id, physical, self.config.unit_module(physical))
        for s in msg.epr_sockets:
            ctx.sockets[s.socket_id] = EprSocketBinding(s.socket_id, s.remote_node_id, s.remote_socket_id, s.min_fidelity)
        self.apps[app_id] = ctx
        self.emit(RegisterAppOK(msg.message_id, app_id))

    def _pick_qubits(self, n: int) -> list[int] | None:
        if n < 1 or n > len(self.free):
            return None
        if self.config.profile != "nv":
            return sorted(self.free)[:n]
        comm = [p for p in self.free if self.config.qubit_types[p] is QubitType.COMMUNICATION]
        storage = sorted(p for p in self.free if self.config.qubit_types[p] is QubitType.STORAGE)
        if not comm or len(storage) < n - 1:
            return None
        return [comm[0]] + storage[: n - 1]

    def stop_app(self, app_id: int) -> None:
        ctx = self.app(app_id)
        for vid in sorted(ctx.allocated):
            gid = self.global_id(ctx, vid)
            if self.memory.has(gid):
                self.memory.free_qubit(gid)
        self.netstack.cancel_app(self.node_id, app_id)
        self.free = sorted(self.free + ctx.physical)
        del self.apps[app_id]

    # execution ------------------------------------------------------------
    def _start(self, msg: SubroutineMsg) -> None:
        ctx = self.app(msg.app_id)
        sub = decode(msg.subroutine)
        if sub.app_id != msg.app_id:
            raise NoSuchApp(f"subroutine names app {sub.app_id}, message names {msg.app_id}", app_id=msg.app_id)
        if ctx.run is not None:
            raise ExecutionError("a subroutine is already running for this app", app_id=msg.app_id)
        flavor = sub.flavor
        if flavor is Flavor.NV and self.config.profile != "nv":
            raise WrongFlavor("NV subroutine sent to a non-NV node")
        if flavor is not Flavor.NV and self.config.profile == "nv":
            # the node maps vanilla code itself, instruction by instruction
            if ctx.translator is None:
                ctx.translator = NVCompiler(ctx.um, "adhoc")
            result = ctx.translator.compile(sub)
            self.stats["moves"] += result.moves
            sub = result.subroutine
        ctx.run = _Run(msg.message_id, sub)
        self._advance(ctx)

    def notify(self, app_id: int) -> None:
        """Re-check a blocked wait after the network stack wrote memory."""
        ctx = self.apps.get(app_id)
        if ctx is not None and ctx.run is not None and ctx.run.blocked:
            ins = ctx.run.sub.instructions[ctx.run.pc]
            if self._wait_satisfied(ctx, ins):
                ctx.run.blocked = False
                self.scheduler.schedule(0, self.node_id, lambda: self._advance(ctx))

    def _advance(self, ctx: AppContext) -> None:
        run = ctx.run
        if run is None or ctx.app_id not in self.apps:
            return
        n = len(run.sub.instructions)
        while run.pc < n:
            ins = run.sub.instructions[run.pc]
            if ins.opcode.group == "wait" and not self._wait_satisfied(ctx, ins):
                run.blocked = True
                self._memory_update(ctx)
                return
            try:
                delay = self._execute(ctx, ins)
            except ExecutionError as exc:
                exc.app_id, exc.pc = ctx.app_id, run.pc
                raise
            except NetQASMError as exc:
                raise ExecutionError(f"{exc.code}: {exc}", app_id=ctx.app_id, pc=run.pc) from exc
            if delay:
                self.scheduler.schedule(delay, self.node_id, lambda: self._advance(ctx))
                return
        self._memory_update(ctx)
        ctx.run = None
        self.emit(Done(run.message_id))

    def _memory_update(self, ctx: AppContext) -> None:
        run = ctx.run
        regs = {r: ctx.shmem.reg_get(r) for r in run.ret_regs}
        arrays = {a: tuple(ctx.shmem.array(a)) for a in run.ret_arrs}
        self.emit(MemoryUpdate(run.message_id, ctx.app_id, regs, arrays))

    def _wait_satisfied(self, ctx: AppContext, ins: Instruction) -> bool:
        m, op = ins.mnemonic, ins.operands[0]
        if m == "wait_single":
            return ctx.shmem.entry_defined(op)
        return ctx.shmem.slice_defined(op, "all" if m == "wait_all" else "any")

    def _value(self, ctx: AppContext, op) -> int:
        return ctx.shmem.reg_get(op) if isinstance(op, Register) else op

    def _qubit(self, ctx: AppContext, reg: Register) -> tuple[int, int]:
        vid = ctx.shmem.reg_get(reg)
        if vid not in ctx.allocated:
            raise QubitNotAllocated(f"virtual qubit {vid} is not allocated")
        return vid, self.global_id(ctx, vid)

    def _execute(self, ctx: AppContext, ins: Instruction) -> float:
        """Run one instruction, move the program counter, return its duration."""
        run, mem, m, ops = ctx.run, ctx.shmem, ins.mnemonic, ins.operands
        n = len(run.sub.instructions)
        group = ins.opcode.group
        nxt = run.pc + 1
        delay = 0.0
        if group == "classical":
            a, b = mem.reg_get(ops[1]), mem.reg_get(ops[2])
            if m == "add":
                r = a + b
            elif m == "sub":
                r = a - b
            else:
                mod = mem.reg_get(ops[3])
                if mod <= 0:
                    raise BadModulus(f"modulus {mod} must be positive")
                r = (a + b) % mod if m == "addm" else (a - b) % mod
            mem.reg_set(ops[0], r)
        elif group == "branch":
            slot = branch_target_slot(ins.opcode)
            target = ops[slot]
            if not 0 <= target <= n:
                raise InvalidBranch(f"branch target {target} outside [0, {n}]")
            if m == "jmp":
                taken = True
            elif m in ("bez", "bnz"):
                v = mem.reg_get(ops[0])
                taken = (v == 0) == (m == "bez")
            else:
                a, b = mem.reg_get(ops[0]), mem.reg_get(ops[1])
                taken = {"beq": a == b, "bne": a != b, "blt": a < b, "bge": a >= b}[m]
            if taken:
                nxt = target
        elif m == "set":
            mem.reg_set(ops[0], ops[1])
        elif m == "store":
            mem.array_store(mem.reg_get(ops[0]), ops[1])
        elif m == "load":
            mem.reg_set(ops[0], mem.array_load(ops[1]))
        elif m == "undef":
            mem.array_undef(ops[0])
        elif m == "lea":
            mem.reg_set(ops[0], ops[1].address)
        elif m == "array":
            mem.array_new(self._value(ctx, ops[0]), ops[1].address)
        elif m == "qalloc":
            vid = mem.reg_get(ops[0])
            if ctx.um.qubit(vid) is None:
                raise QubitNotAllocated(f"virtual qubit {vid} is not in the unit module")
            if vid in ctx.allocated:
                raise QubitBusy(f"virtual qubit {vid} is already allocated")
            ctx.allocated.add(vid)
            gid = self.global_id(ctx, vid)
            if self.memory.has(gid):
                self.memory.free_qubit(gid)
            self.memory.add_qubit(gid)
        elif m == "qfree":
            vid, gid = self._qubit(ctx, ops[0])
            ctx.allocated.discard(vid)
            if self.memory.has(gid):
                self.memory.free_qubit(gid)
        elif group == "wait":
            pass  # only reached once satisfied
        elif m == "ret_reg":
            if ops[0] not in run.ret_regs:
                run.ret_regs.append(ops[0])
        elif m == "ret_arr":
            if ops[0].address not in run.ret_arrs:
                run.ret_arrs.append(ops[0].address)
        elif group == "pmr":
            axes = m[4:]
            angles = [angle_value(AngleSpec(ops[i], ops[i + 1])) for i in (0, 2, 4)]
            ctx.pending_pmr = (axes, angles)
        elif group == "epr":
            self._submit(ctx, ins)
        elif group == "init":
            vid, gid = self._qubit(ctx, ops[0])
            spec = self._spec(ctx, "init", (vid,))
            self.memory.init_qubit(gid, spec.fidelity, spec.duration)
            delay = spec.duration
            self.stats["quantum_ops"] += 1
        elif group in ("gate1", "gate2"):
            qregs = ops[:1] if group == "gate1" else ops[:2]
            pairs = [self._qubit(ctx, r) for r in qregs]
            vids = tuple(v for v, _ in pairs)
            if len(set(vids)) != len(vids):
                raise ExecutionError("two-qubit gate on a single qubit")
            spec = self._spec(ctx, m, vids)
            angle = None
            if m.startswith("rot_") or m.endswith("_dir"):
                angle = angle_value(AngleSpec(ops[-2], ops[-1]))
            self.memory.apply_gate(gate_matrix(m, angle), [g for _, g in pairs], spec.fidelity, spec.duration)
            delay = spec.duration
            self.stats["quantum_ops"] += 1
            if group == "gate2":
                self.stats["two_qubit_ops"] += 1
        elif m == "meas":
            vid, gid = self._qubit(ctx, ops[0])
            spec = self._spec(ctx, "meas", (vid,))
            if ctx.pending_pmr is not None:
                axes, angles = ctx.pending_pmr
                for axis, theta in zip(axes, angles):
                    self.memory.apply_gate(rot(axis, theta), [gid])
                ctx.pending_pmr = None
            rng = self._meas_stream(ctx, int(ops[1].name), ops[1].index)
            bit = self.memory.measure(gid, ctx.um.prob_error_meas_0, ctx.um.prob_error_meas_1, spec.duration, rng)
            mem.reg_set(ops[1], bit)
            delay = spec.duration
            self.stats["quantum_ops"] += 1
            self.stats["measurements"] += 1
        else:
            raise ExecutionError(f"no semantics for {m}")
        run.pc = nxt
        return delay

    def _spec(self, ctx: AppContext, mnemonic: str, vids):
        spec = ctx.um.gate_spec(mnemonic, vids)
        if spec is None:
            raise ExecutionError(f"{mnemonic} is not supported on virtual qubits {vids}")
        return spec

    def _meas_stream(self, ctx: AppContext, *key: int):
        # Measurement randomness is keyed by what the program measures into
        # and how often, so two compilations of one program that only reorder
        # measurements still see the same outcome and readout-flip draws.
        count = ctx.draws.get(key, 0)
        ctx.draws[key] = count + 1
        return self.scheduler.stream(self.node_id, ctx.app_id, *key, count)

    def measure_now(self, ctx: AppContext, gid: int) -> int:
        """Z measurement for measure-directly pairs (no extra delay)."""
        rng = self._meas_stream(ctx, 1 << 8)
        return self.memory.measure(gid, ctx.um.prob_error_meas_0, ctx.um.prob_error_meas_1, rng=rng)

    def _submit(self, ctx: AppContext, ins: Instruction) -> None:
        mem, ops = ctx.shmem, ins.operands
        vals = [mem.reg_get(r) for r in ops]
        if ins.mnemonic == "create_epr":
            remote, sock, qaddr, args_addr, entinfo = vals
            args = mem.array(args_addr)
            etype = args[0] if len(args) > 0 and args[0] is not None else CK
            pairs = args[1] if len(args) > 1 and args[1] is not None else 1
            req = EntRequest("create", self.node_id, ctx.app_id, remote, sock, qaddr, entinfo, args_addr, pairs, etype)
        else:
            remote, sock, qaddr, entinfo = vals
            req = EntRequest("recv", self.node_id, ctx.app_id, remote, sock, qaddr, entinfo)
        if len(mem.array(entinfo)) < ENTINFO_WIDTH * req.pairs:
            raise ExecutionError(f"entinfo array @{entinfo} too short for {req.pairs} pairs")
        self.netstack.submit(req)

    def qubit_state(self, app_id: int, vid: int, logical: bool = True):
        """Reduced density matrix of one virtual qubit (simulation introspection)."""
        gid = self.physical_qubit(app_id, vid, logical)
        if not self.memory.has(gid):
            raise NoSuchQubit(f"qubit {vid} holds no state")
        return self.memory.reduced_state([gid])
