"""The seven application-layer <-> QNPU messages and their byte framing.

Frame: type (1 byte) | message_id (int32 LE) | payload length (uint32 LE) | payload.
All payload integers are little-endian int32 unless noted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import Truncated, UnknownMessageType
from ..isa import Register

__all__ = [
    "EprSocketSpec",
    "RegisterApp",
    "RegisterAppOK",
    "RegisterAppErr",
    "SubroutineMsg",
    "Done",
    "MemoryUpdate",
    "StopApp",
    "ERR_RESOURCES",
    "ERR_SOCKET",
    "encode_message",
    "decode_message",
]

ERR_RESOURCES = 1
ERR_SOCKET = 2

_FRAME = struct.Struct("<BiI")
_I32 = struct.Struct("<i")


@dataclass(frozen=True)
class EprSocketSpec:
    socket_id: int
    remote_node_id: int
    remote_socket_id: int
    min_fidelity: int = 0  # x 10^4


@dataclass(frozen=True)
class RegisterApp:
    message_id: int
    num_qubits: int
    epr_sockets: tuple[EprSocketSpec, ...] = ()
    TYPE = 0x01


@dataclass(frozen=True)
class RegisterAppOK:
    message_id: int
    app_id: int
    TYPE = 0x02


@dataclass(frozen=True)
class RegisterAppErr:
    message_id: int
    error_code: int
    TYPE = 0x03


@dataclass(frozen=True)
class SubroutineMsg:
    message_id: int
    app_id: int
    subroutine: bytes
    TYPE = 0x04


@dataclass(frozen=True)
class Done:
    message_id: int  # id of the SubroutineMsg that finished
    TYPE = 0x05


@dataclass(frozen=True)
class MemoryUpdate:
    message_id: int
    app_id: int
    registers: dict = field(default_factory=dict)  # Register -> int
    arrays: dict = field(default_factory=dict)  # address -> tuple of int | None
    TYPE = 0x06


@dataclass(frozen=True)
class StopApp:
    message_id: int
    app_id: int
    TYPE = 0x07


_TYPES = {cls.TYPE: cls for cls in (RegisterApp, RegisterAppOK, RegisterAppErr, SubroutineMsg, Done, MemoryUpdate, StopApp)}


def _ints(*values: int) -> bytes:
    return b"".join(_I32.pack(v) for v in values)


def _payload(msg) -> bytes:
    if isinstance(msg, RegisterApp):
        out = _ints(msg.num_qubits, len(msg.epr_sockets))
        for s in msg.epr_sockets:
            out += _ints(s.socket_id, s.remote_node_id, s.remote_socket_id, s.min_fidelity)
        return out
    if isinstance(msg, RegisterAppOK):
        return _ints(msg.app_id)
    if isinstance(msg, RegisterAppErr):
        return _ints(msg.error_code)
    if isinstance(msg, SubroutineMsg):
        return _ints(msg.app_id) + msg.subroutine
    if isinstance(msg, Done):
        return b""
    if isinstance(msg, MemoryUpdate):
        out = _ints(msg.app_id, len(msg.registers))
        for reg in sorted(msg.registers):
            out += bytes([reg.to_byte()]) + _ints(msg.registers[reg])
        out += _ints(len(msg.arrays))
        for addr in sorted(msg.arrays):
            values = msg.arrays[addr]
            out += _ints(addr, len(values))
            for v in values:
                out += b"\x00" + _ints(0) if v is None else b"\x01" + _ints(v)
        return out
    if isinstance(msg, StopApp):
        return _ints(msg.app_id)
    raise TypeError(f"not a protocol message: {msg!r}")


def encode_message(msg) -> bytes:
    payload = _payload(msg)
    return _FRAME.pack(msg.TYPE, msg.message_id, len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes, base: int):
        self.data, self.pos, self.base = data, 0, base

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Truncated("payload ends early", offset=self.base + self.pos)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def i32(self) -> int:
        return _I32.unpack(self.take(4))[0]

    def rest(self) -> bytes:
        return self.take(len(self.data) - self.pos)

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise Truncated("payload length does not match its content", offset=self.base + self.pos)


def decode_message(data: bytes):
    if len(data) < _FRAME.size:
        raise Truncated("frame header incomplete", offset=len(data))
    mtype, mid, length = _FRAME.unpack_from(data)
    if mtype not in _TYPES:
        raise UnknownMessageType(f"unknown message type 0x{mtype:02x}", offset=0)
    payload = data[_FRAME.size:]
    if len(payload) != length:
        raise Truncated(f"frame declares {length} payload bytes, found {len(payload)}", offset=_FRAME.size)
    r = _Reader(payload, _FRAME.size)
    if mtype == RegisterApp.TYPE:
        n, k = r.i32(), r.i32()
        socks = tuple(EprSocketSpec(r.i32(), r.i32(), r.i32(), r.i32()) for _ in range(k))
        msg = RegisterApp(mid, n, socks)
    elif mtype == RegisterAppOK.TYPE:
        msg = RegisterAppOK(mid, r.i32())
    elif mtype == RegisterAppErr.TYPE:
        msg = RegisterAppErr(mid, r.i32())
    elif mtype == SubroutineMsg.TYPE:
        msg = SubroutineMsg(mid, r.i32(), r.rest())
    elif mtype == Done.TYPE:
        msg = Done(mid)
    elif mtype == MemoryUpdate.TYPE:
        app_id, nregs = r.i32(), r.i32()
        regs = {}
        for _ in range(nregs):
            reg = Register.from_byte(r.take(1)[0])
            regs[reg] = r.i32()
        arrays = {}
        for _ in range(r.i32()):
            addr, n = r.i32(), r.i32()
            values = []
            for _ in range(n):
                flag = r.take(1)[0]
                v = r.i32()
                values.append(v if flag else None)
            arrays[addr] = tuple(values)
        msg = MemoryUpdate(mid, app_id, regs, arrays)
    else:
        msg = StopApp(mid, r.i32())
    r.finish()
    return msg
