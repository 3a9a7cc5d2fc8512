import pytest

from nqasm.errors import AddressInUse, IndexOutOfRange, NoSuchArray, NullEntry
from nqasm.isa import ArrayEntry, ArraySlice, Register
from nqasm.shmem import AppView, SharedMemory, wrap_int32

R0, R1 = Register.parse("R0"), Register.parse("R1")


def test_registers_start_at_zero_and_wrap():
    mem = SharedMemory()
    assert mem.reg_get(R0) == 0
    mem.reg_set(R0, 2**31)
    assert mem.reg_get(R0) == -(2**31)
    assert wrap_int32(-(2**31) - 1) == 2**31 - 1


def test_array_lifecycle():
    mem = SharedMemory()
    mem.array_new(3, 5)
    assert mem.array(5) == [None, None, None]
    mem.reg_set(R0, 2)
    mem.array_store(7, ArrayEntry(5, R0))
    assert mem.array_load(ArrayEntry(5, R0)) == 7
    assert mem.entry_defined(ArrayEntry(5, R0))
    mem.array_undef(ArrayEntry(5, R0))
    with pytest.raises(NullEntry):
        mem.array_load(ArrayEntry(5, R0))


def test_array_errors():
    mem = SharedMemory()
    mem.array_new(2, 0)
    with pytest.raises(AddressInUse):
        mem.array_new(2, 0)
    with pytest.raises(NoSuchArray):
        mem.array(1)
    mem.reg_set(R0, 2)
    with pytest.raises(IndexOutOfRange):
        mem.array_store(1, ArrayEntry(0, R0))


def test_slices():
    mem = SharedMemory()
    mem.array_new(4, 0)
    mem.reg_set(R1, 4)
    sl = ArraySlice(0, R0, R1)
    assert not mem.slice_defined(sl, "any")
    mem.write_block(0, 1, [1, 2])
    assert mem.slice_defined(sl, "any")
    assert not mem.slice_defined(sl, "all")
    mem.write_block(0, 0, [0])
    mem.write_block(0, 3, [3])
    assert mem.slice_defined(sl, "all")
    with pytest.raises(IndexOutOfRange):
        mem.write_block(0, 3, [1, 2])


def test_app_view_is_a_snapshot():
    mem = SharedMemory()
    mem.array_new(2, 0)
    mem.reg_set(R0, 4)
    view = mem.app_view_update(AppView(), [R0], [0])
    mem.reg_set(R0, 5)
    assert view.reg("R0") == 4
    assert view.array(0) == (None, None)
    merged = view.merged({R1: 1}, {})
    assert merged.reg("R1") == 1 and merged.reg("R0") == 4
