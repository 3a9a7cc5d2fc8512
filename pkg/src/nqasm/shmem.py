"""Per-application shared memory: a register file plus nullable-int arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import AddressInUse, IndexOutOfRange, NoSuchArray, NullEntry
from .isa import NUM_REGISTERS, ArrayEntry, ArraySlice, Register, RegName

__all__ = ["SharedMemory", "AppView", "wrap_int32"]


def wrap_int32(value: int) -> int:
    return (value + 2**31) % 2**32 - 2**31


class SharedMemory:
    """Registers (4 names x 16, default 0) and fixed-length arrays of optional int32."""

    def __init__(self):
        self._regs = [[0] * NUM_REGISTERS for _ in RegName]
        self._arrays: dict[int, list[int | None]] = {}

    # registers
    def reg_get(self, ref: Register) -> int:
        return self._regs[ref.name][ref.index]

    def reg_set(self, ref: Register, value: int) -> None:
        self._regs[ref.name][ref.index] = wrap_int32(int(value))

    # arrays
    def array_new(self, length: int, address: int) -> None:
        if address in self._arrays:
            raise AddressInUse(f"array @{address} already exists")
        if length < 0:
            raise IndexOutOfRange(f"negative array length {length}")
        self._arrays[address] = [None] * length

    def has_array(self, address: int) -> bool:
        return address in self._arrays

    def array(self, address: int) -> list[int | None]:
        try:
            return self._arrays[address]
        except KeyError:
            raise NoSuchArray(f"no array at @{address}") from None

    def _index(self, value) -> int:
        return self.reg_get(value) if isinstance(value, Register) else int(value)

    def _slot(self, entry: ArrayEntry) -> tuple[list, int]:
        arr = self.array(entry.address)
        i = self._index(entry.index)
        if not 0 <= i < len(arr):
            raise IndexOutOfRange(f"index {i} outside @{entry.address} of length {len(arr)}")
        return arr, i

    def array_store(self, value: int, entry: ArrayEntry) -> None:
        arr, i = self._slot(entry)
        arr[i] = wrap_int32(int(value))

    def array_load(self, entry: ArrayEntry) -> int:
        arr, i = self._slot(entry)
        if arr[i] is None:
            raise NullEntry(f"@{entry.address}[{i}] is null")
        return arr[i]

    def array_undef(self, entry: ArrayEntry) -> None:
        arr, i = self._slot(entry)
        arr[i] = None

    def entry_defined(self, entry: ArrayEntry) -> bool:
        arr, i = self._slot(entry)
        return arr[i] is not None

    def slice_bounds(self, sl: ArraySlice) -> tuple[int, int]:
        arr = self.array(sl.address)
        start, stop = self._index(sl.start), self._index(sl.stop)
        if not 0 <= start <= stop <= len(arr):
            raise IndexOutOfRange(f"slice [{start}:{stop}] outside @{sl.address} of length {len(arr)}")
        return start, stop

    def slice_defined(self, sl: ArraySlice, quantifier: str = "all") -> bool:
        start, stop = self.slice_bounds(sl)
        values = self._arrays[sl.address][start:stop]
        if quantifier == "all":
            return all(v is not None for v in values)
        if quantifier == "any":
            return any(v is not None for v in values)
        raise ValueError(quantifier)

    def write_block(self, address: int, offset: int, values: Iterable[int]) -> None:
        """Write consecutive entries in one step (used for entanglement records)."""
        arr = self.array(address)
        values = list(values)
        if offset < 0 or offset + len(values) > len(arr):
            raise IndexOutOfRange(f"block [{offset}:{offset + len(values)}] outside @{address}")
        arr[offset:offset + len(values)] = [wrap_int32(v) for v in values]

    def addresses(self) -> list[int]:
        return sorted(self._arrays)

    def app_view_update(self, view: AppView, registers: Iterable[Register], addresses: Iterable[int]) -> AppView:
        regs = dict(view.registers)
        arrays = dict(view.arrays)
        for r in registers:
            regs[r] = self.reg_get(r)
        for a in addresses:
            arrays[a] = tuple(self.array(a))
        return AppView(regs, arrays)


@dataclass(frozen=True)
class AppView:
    """Read-only copy of the returned part of an app's shared memory."""

    registers: Mapping[Register, int] = field(default_factory=dict)
    arrays: Mapping[int, tuple] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "registers", MappingProxyType(dict(self.registers)))
        object.__setattr__(self, "arrays", MappingProxyType({k: tuple(v) for k, v in self.arrays.items()}))

    def reg(self, name: str | Register) -> int:
        ref = Register.parse(name) if isinstance(name, str) else name
        return self.registers[ref]

    def array(self, address: int) -> tuple:
        return self.arrays[address]

    def merged(self, registers: Mapping[Register, int], arrays: Mapping[int, tuple]) -> AppView:
        regs = dict(self.registers)
        regs.update(registers)
        arrs = dict(self.arrays)
        arrs.update(arrays)
        return AppView(regs, arrs)
