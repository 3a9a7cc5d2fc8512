"""Application-layer runtime: program drivers, classical sockets, network runner.

A program driver is a generator function taking a :class:`ProgramContext`.  It
talks to its node's QNPU through the context and yields wherever it has to
wait::

    def alice(ctx):
        yield from ctx.register(num_qubits=1)
        view = yield from ctx.execute(source_text)
        ctx.send("bob", view.reg("M0"))
        reply = yield from ctx.recv("bob")
        ctx.stop()
        return {"m": view.reg("M0"), "reply": reply}
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..asm import assemble
from ..codec import encode
from ..compiler.nv import NVCompiler
from ..config import NetworkConfig
from ..errors import Deadlock, NetQASMError, PeerClosed, ProtocolOrder
from ..isa import Flavor, Subroutine
from ..qnpu import QNPU, Netstack, Scheduler
from ..qsim import QuantumMemory
from ..shmem import AppView
from .messages import (
    Done,
    EprSocketSpec,
    MemoryUpdate,
    RegisterApp,
    RegisterAppErr,
    RegisterAppOK,
    StopApp,
    SubroutineMsg,
    decode_message,
    encode_message,
)

__all__ = ["EprSocket", "ProgramContext", "NetworkResult", "Runtime", "run_network", "RegistrationFailed"]


class RegistrationFailed(NetQASMError):
    def __init__(self, error_code: int):
        self.error_code = error_code
        super().__init__(f"registration rejected with error code {error_code}")


@dataclass(frozen=True)
class EprSocket:
    remote: str  # node name
    socket_id: int = 0
    remote_socket_id: int = 0
    min_fidelity: int = 0


@dataclass
class _Wait:
    ready: Callable[[], bool]
    value: Callable[[], object]
    what: str


@dataclass(frozen=True)
class TraceEntry:
    node: str
    direction: str  # "to_qnpu" | "to_host"
    kind: str
    message_id: int
    app_id: int | None
    time: float


class ProgramContext:
    """Handle a driver uses to reach its QNPU and its peers."""

    def __init__(self, runtime: Runtime, node: str, compile_mode: str | None = None):
        self.runtime = runtime
        self.node = node
        self.qnpu: QNPU = runtime.qnpus[node]
        self.compile_mode = compile_mode
        self.compiler: NVCompiler | None = None
        self.app_id: int | None = None
        self.stopped = False
        self.view = AppView()
        self.moves = 0
        self._next_id = 0
        self._inbox: list = []
        self._done: set[int] = set()
        self._last_sent: int | None = None

    # protocol ---------------------------------------------------------------
    def _msg_id(self) -> int:
        mid = self._next_id
        self._next_id += 1
        return mid

    def _deliver(self, msg) -> None:
        if isinstance(msg, MemoryUpdate):
            self.view = self.view.merged(msg.registers, msg.arrays)
        elif isinstance(msg, Done):
            self._done.add(msg.message_id)
        else:
            self._inbox.append(msg)

    def register(self, num_qubits: int, epr_sockets=()):
        if self.app_id is not None:
            raise ProtocolOrder("app already registered")
        specs = tuple(
            EprSocketSpec(s.socket_id, self.runtime.config.node(s.remote).id, s.remote_socket_id, s.min_fidelity)
            for s in epr_sockets
        )
        mid = self._msg_id()
        self.runtime.to_qnpu(self, RegisterApp(mid, num_qubits, specs))
        reply = yield _Wait(lambda: bool(self._inbox), lambda: self._inbox.pop(0), f"registration reply to message {mid}")
        if isinstance(reply, RegisterAppErr):
            raise RegistrationFailed(reply.error_code)
        assert isinstance(reply, RegisterAppOK)
        self.app_id = reply.app_id
        if self.compile_mode and self.qnpu.config.profile == "nv":
            self.compiler = NVCompiler(self.qnpu.unit_module(self.app_id), self.compile_mode)
        return self.app_id

    def subroutine(self, source: str | Subroutine, **defines) -> Subroutine:
        """Assemble text (app id taken from the registration, ``defines``
        overriding its DEFINE directives) and compile it when the context has a
        compile mode."""
        if self.app_id is None:
            raise ProtocolOrder("subroutine before registration")
        if isinstance(source, str):
            sub = assemble(source, defines=defines)
            sub = Subroutine(sub.version, self.app_id, sub.instructions)
        else:
            sub = source
        if self.compiler is not None and sub.flavor is not Flavor.NV:
            result = self.compiler.compile(sub)
            self.moves += result.moves
            sub = result.subroutine
        return sub

    def execute(self, source: str | Subroutine):
        """Send one subroutine and wait for Done; returns the updated AppView."""
        if self.app_id is None:
            raise ProtocolOrder("subroutine before registration")
        sub = self.subroutine(source)
        mid = self._msg_id()
        self._last_sent = mid
        self.runtime.to_qnpu(self, SubroutineMsg(mid, sub.app_id, encode(sub)))
        return (yield _Wait(lambda: mid in self._done, lambda: self.view, f"Done for subroutine message {mid}"))

    def stop(self) -> None:
        if self.app_id is None:
            raise ProtocolOrder("stop before registration")
        self.runtime.to_qnpu(self, StopApp(self._msg_id(), self.app_id))
        self.stopped = True

    # classical messaging ----------------------------------------------------
    def send(self, peer: str, value) -> None:
        """Non-blocking; ``value`` must be JSON-serialisable."""
        other = self.runtime.contexts.get(peer)
        if other is None or other.stopped:
            raise PeerClosed(f"{peer} is not running")
        self.runtime.classical_send(self.node, peer, json.dumps(value).encode())

    def recv(self, peer: str):
        q = self.runtime.socket(peer, self.node)
        data = yield _Wait(lambda: bool(q), q.popleft, f"classical message from {peer}")
        return json.loads(data.decode())

    # simulation introspection -----------------------------------------------
    def qubit_state(self, vid: int) -> np.ndarray:
        """Reduced density matrix of virtual qubit ``vid`` (as the program names it)."""
        if self.compiler is not None:
            return self.qnpu.qubit_state(self.app_id, self.compiler.placement.pos[vid], logical=False)
        return self.qnpu.qubit_state(self.app_id, vid, logical=True)

    @property
    def time(self) -> float:
        return self.runtime.scheduler.now


@dataclass
class NetworkResult:
    outputs: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


class Runtime:
    """One simulated network instance: scheduler, quantum memory, QNPUs and sockets."""

    def __init__(self, config: NetworkConfig, seed: int | None = None):
        self.config = config
        self.scheduler = Scheduler(config.seed if seed is None else seed)
        self.memory = QuantumMemory(rng=self.scheduler.rng, two_qubit_channel=config.two_qubit_channel)
        self.netstack = Netstack(self.scheduler, self.memory, self._link)
        self.qnpus: dict[str, QNPU] = {}
        for node in config.nodes:
            self.qnpus[node.name] = QNPU(node, self.scheduler, self.memory, self.netstack)
        self.contexts: dict[str, ProgramContext] = {}
        self._sockets: dict[tuple[str, str], deque] = {}
        self.trace: list[TraceEntry] = []

    def _link(self, a: int, b: int):
        na, nb = self.config.node_by_id(a).name, self.config.node_by_id(b).name
        return self.config.link(na, nb)

    def socket(self, src: str, dst: str) -> deque:
        return self._sockets.setdefault((src, dst), deque())

    def classical_send(self, src: str, dst: str, data: bytes) -> None:
        q = self.socket(src, dst)
        node_id = self.config.node(src).id
        self.scheduler.schedule(self.config.classical_latency, node_id, lambda: q.append(data))

    def _record(self, node: str, direction: str, msg) -> None:
        self.trace.append(
            TraceEntry(node, direction, type(msg).__name__, msg.message_id, getattr(msg, "app_id", None), self.scheduler.now)
        )

    def to_qnpu(self, ctx: ProgramContext, msg) -> None:
        data = encode_message(msg)
        qnpu = ctx.qnpu
        self._record(ctx.node, "to_qnpu", msg)
        self.scheduler.schedule(0, qnpu.node_id, lambda: qnpu.handle(decode_message(data)))

    def _wire(self, ctx: ProgramContext) -> None:
        def to_host(msg):
            data = encode_message(msg)
            self._record(ctx.node, "to_host", msg)
            ctx._deliver(decode_message(data))

        ctx.qnpu.emit = to_host

    def run(self, programs: dict[str, Callable], compile_modes: dict[str, str] | None = None) -> NetworkResult:
        compile_modes = compile_modes or {}
        drivers = {}
        for name in sorted(programs, key=lambda n: self.config.node(n).id):
            ctx = ProgramContext(self, name, compile_modes.get(name))
            self.contexts[name] = ctx
            self._wire(ctx)
            drivers[name] = [programs[name](ctx), None]  # generator, current wait
        result = NetworkResult()
        end_time = {}

        def advance(name, value):
            gen = drivers[name][0]
            try:
                drivers[name][1] = gen.send(value)
            except StopIteration as stop:
                result.outputs[name] = stop.value
                end_time[name] = self.scheduler.now
                del drivers[name]

        for name in list(drivers):
            advance(name, None)
        while drivers:
            progressed = True
            while progressed:
                progressed = False
                for name in list(drivers):
                    wait = drivers[name][1]
                    if wait.ready():
                        advance(name, wait.value())
                        progressed = True
            if not drivers:
                break
            if not self.scheduler.step():
                raise Deadlock([self._describe(n, d[1]) for n, d in drivers.items()])
        for name, ctx in self.contexts.items():
            stats = dict(ctx.qnpu.stats)
            stats["moves"] += ctx.moves
            stats["end_time_ns"] = end_time.get(name, self.scheduler.now)
            result.metrics[name] = stats
        result.trace = list(self.trace)
        return result

    def _describe(self, name: str, wait: _Wait) -> str:
        ctx = self.contexts[name]
        text = f"{name}: waiting for {wait.what}"
        app = ctx.qnpu.apps.get(ctx.app_id) if ctx.app_id is not None else None
        if app is not None and app.run is not None:
            pc = app.run.pc
            ins = app.run.sub.instructions[pc] if pc < len(app.run.sub.instructions) else None
            text += f"; app {ctx.app_id} blocked at instruction {pc}" + (f" ({ins})" if ins else "")
        return text


def run_network(
    config: NetworkConfig,
    programs: dict[str, Callable],
    seed: int | None = None,
    compile_modes: dict[str, str] | None = None,
) -> NetworkResult:
    """Run one driver per node to completion under a fresh deterministic scheduler."""
    for name in programs:
        config.node(name)
    return Runtime(config, seed).run(programs, compile_modes)
