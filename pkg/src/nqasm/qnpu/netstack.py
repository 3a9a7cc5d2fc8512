"""Simulated network stack: matches create/recv requests and delivers pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..errors import BadQubitArray, ExecutionError, NoSuchSocket, QubitBusy

if TYPE_CHECKING:  # pragma: no cover
    from .node import QNPU

__all__ = ["EntRequest", "EprSocketBinding", "Netstack", "CK", "MD", "ENTINFO_WIDTH"]

CK = 0
MD = 1
ENTINFO_WIDTH = 10


@dataclass(frozen=True)
class EprSocketBinding:
    socket_id: int
    remote_node_id: int
    remote_socket_id: int
    min_fidelity: int = 0


@dataclass
class EntRequest:
    side: str  # "create" | "recv"
    node_id: int
    app_id: int
    remote_node_id: int
    socket_id: int
    qubit_addr: int
    entinfo_addr: int
    args_addr: int | None = None
    pairs: int = 1
    type: int = CK
    delivered: int = field(default=0, compare=False)


class Netstack:
    """FIFO matcher over bound socket pairs for one network.

    A create request and a recv request match when the creator's socket binds
    to the receiver's node and socket id and vice versa.  Pairs of a matched
    request are produced one at a time, one link cycle apart.
    """

    def __init__(self, scheduler, memory, link_lookup):
        self.scheduler = scheduler
        self.memory = memory
        self.link_lookup = link_lookup  # (node id, node id) -> LinkConfig
        self.nodes: dict[int, QNPU] = {}
        self.pending: list[EntRequest] = []
        self.delivered_pairs = 0

    def attach(self, qnpu: QNPU) -> None:
        self.nodes[qnpu.node_id] = qnpu

    def binding(self, req: EntRequest) -> EprSocketBinding:
        ctx = self.nodes[req.node_id].app(req.app_id)
        b = ctx.sockets.get(req.socket_id)
        if b is None or b.remote_node_id != req.remote_node_id:
            raise NoSuchSocket(
                f"socket {req.socket_id} to node {req.remote_node_id} is not bound", app_id=req.app_id
            )
        return b

    def submit(self, req: EntRequest) -> None:
        self.binding(req)
        self.pending.append(req)
        self._match()

    def cancel_app(self, node_id: int, app_id: int) -> None:
        self.pending = [r for r in self.pending if not (r.node_id == node_id and r.app_id == app_id)]

    def _pairs_with(self, c: EntRequest, r: EntRequest) -> bool:
        bc, br = self.binding(c), self.binding(r)
        return (
            c.side == "create"
            and r.side == "recv"
            and bc.remote_node_id == r.node_id
            and br.remote_node_id == c.node_id
            and bc.remote_socket_id == r.socket_id
            and br.remote_socket_id == c.socket_id
        )

    def _match(self) -> None:
        for c in list(self.pending):
            if c.side != "create":
                continue
            for r in self.pending:
                if self._pairs_with(c, r):
                    self.pending.remove(c)
                    self.pending.remove(r)
                    r.pairs, r.type = c.pairs, c.type
                    self._schedule_pair(c, r)
                    break

    def _schedule_pair(self, c: EntRequest, r: EntRequest) -> None:
        link = self.link_lookup(c.node_id, r.node_id)
        self.scheduler.schedule(link.cycle_time, min(c.node_id, r.node_id), lambda: self._deliver(c, r, link))

    def _half(self, req: EntRequest, i: int) -> tuple[int, int | None]:
        """Global qubit id for pair ``i`` on one side, plus the virtual id (CK)."""
        qnpu = self.nodes[req.node_id]
        ctx = qnpu.app(req.app_id)
        if req.type == MD:
            return qnpu.scratch_qubit(), None
        arr = ctx.shmem.array(req.qubit_addr)
        if i >= len(arr) or arr[i] is None:
            raise BadQubitArray(f"qubit-id array @{req.qubit_addr} has no entry {i}", app_id=req.app_id)
        vid = arr[i]
        if ctx.um.qubit(vid) is None:
            raise BadQubitArray(f"virtual qubit {vid} is not in the unit module", app_id=req.app_id)
        if vid in ctx.allocated:
            raise QubitBusy(f"virtual qubit {vid} is already in use", app_id=req.app_id)
        if ctx.um.is_nv and vid != ctx.um.comm:
            raise ExecutionError(f"entangled qubit {vid} must be the communication qubit", app_id=req.app_id)
        return qnpu.global_id(ctx, vid), vid

    def _deliver(self, c: EntRequest, r: EntRequest, link) -> None:
        if not all(self.nodes[q.node_id].has_app(q.app_id) for q in (c, r)):
            return  # one side stopped meanwhile
        i = c.delivered
        (ga, va), (gb, vb) = self._half(c, i), self._half(r, i)
        self.memory.make_epr_pair(ga, gb, link.link_fidelity, link.cycle_time)
        self.delivered_pairs += 1
        goodness = round(link.link_fidelity * 10_000)
        micros = round(link.cycle_time / 1000)
        for req, gid, vid, remote in ((c, ga, va, r), (r, gb, vb, c)):
            qnpu = self.nodes[req.node_id]
            ctx = qnpu.app(req.app_id)
            if req.type == MD:
                value = qnpu.measure_now(ctx, gid)
                self.memory.free_qubit(gid)
            else:
                ctx.allocated.add(vid)
                value = vid
            record = [i, 0, value, remote.node_id, req.socket_id, goodness, micros, 0, 0, 0]
            ctx.shmem.write_block(req.entinfo_addr, ENTINFO_WIDTH * i, record)
            req.delivered += 1
        if c.delivered < c.pairs:
            self._schedule_pair(c, r)
        for req in (c, r):
            self.nodes[req.node_id].notify(req.app_id)
