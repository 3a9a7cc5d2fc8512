"""Exception hierarchy shared by every layer of the toolchain.

Each error class carries a short ``code`` attribute (the class name) so the
CLI can report the first failing diagnostic without string matching.
"""

from __future__ import annotations


class NetQASMError(Exception):
    """Base class for all toolchain and runtime errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# isa
class UnknownOpcode(NetQASMError):
    def __init__(self, opcode, offset: int | None = None):
        self.opcode = opcode
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unknown opcode {opcode!r}{where}")


class AngleOverflow(NetQASMError):
    pass


# asm
class AsmError(NetQASMError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class MissingDirective(AsmError):
    pass


class UndefinedMacro(AsmError):
    pass


class DirectiveOrder(AsmError):
    pass


class UnknownMnemonic(AsmError):
    pass


class SignatureMismatch(AsmError):
    pass


class UnknownRegisterName(AsmError):
    pass


class DuplicateLabel(AsmError):
    pass


class UndefinedLabel(AsmError):
    pass


class ResolveError(AsmError):
    """Internal consistency failure after label resolution."""


# codec
class CodecError(NetQASMError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        suffix = f" (offset {offset})" if offset is not None else ""
        super().__init__(message + suffix)


class NotLowered(CodecError):
    pass


class BadMagic(CodecError):
    pass


class Truncated(CodecError):
    pass


class TrailingBytes(CodecError):
    pass


class UnsupportedVersion(CodecError):
    pass


class UnknownMessageType(CodecError):
    pass


# compiler
class CompileError(NetQASMError):
    pass


class WrongFlavor(CompileError):
    pass


class NoFreeStorage(CompileError):
    pass


class MissingDurationEntry(CompileError):
    pass


class NotAGateBlock(CompileError):
    pass


class QubitNotStatic(CompileError):
    pass


class PlacementConflict(CompileError):
    pass


# shmem
class MemoryError_(NetQASMError):
    pass


class AddressInUse(MemoryError_):
    pass


class NoSuchArray(MemoryError_):
    pass


class IndexOutOfRange(MemoryError_):
    pass


class NullEntry(MemoryError_):
    pass


# qsim
class SimError(NetQASMError):
    pass


class NotUnitary(SimError):
    pass


class NoSuchQubit(SimError):
    pass


class TooManyQubits(SimError):
    pass


class NotCompletelyPositive(SimError):
    pass


# qnpu
class ExecutionError(NetQASMError):
    def __init__(self, message: str, app_id: int | None = None, pc: int | None = None):
        self.app_id = app_id
        self.pc = pc
        where = ""
        if app_id is not None:
            where = f" [app {app_id}" + (f", instruction {pc}]" if pc is not None else "]")
        super().__init__(message + where)


class QubitNotAllocated(ExecutionError):
    pass


class InvalidBranch(ExecutionError):
    pass


class BadModulus(ExecutionError):
    pass


class NoSuchSocket(ExecutionError):
    pass


class BadQubitArray(ExecutionError):
    pass


class QubitBusy(ExecutionError):
    pass


class NoSuchApp(ExecutionError):
    pass


# host
class ProtocolOrder(NetQASMError):
    pass


class PeerClosed(NetQASMError):
    pass


class Deadlock(NetQASMError):
    """Raised when the scheduler runs dry while drivers are still blocked."""

    def __init__(self, blocked: list[str]):
        self.blocked = blocked
        super().__init__("deadlock; blocked: " + "; ".join(blocked))


class ConfigError(NetQASMError):
    pass
