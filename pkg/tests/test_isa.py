from fractions import Fraction

import pytest

from nqasm.errors import AngleOverflow, UnknownOpcode
from nqasm.isa import (
    OPCODES,
    AngleSpec,
    Flavor,
    OperandKind,
    Register,
    RegName,
    angle_value,
    branch_target_slot,
    flavor_of,
    isa_table,
    lookup,
    opcode,
    signature,
)

I, R = OperandKind.IMMEDIATE, OperandKind.REGISTER


def test_opcode_ranges_per_flavor():
    for code, op in OPCODES.items():
        lo = {Flavor.CORE: 0x00, Flavor.VANILLA: 0x30, Flavor.NV: 0x60}[op.flavor]
        assert lo <= code < lo + 0x30
        assert flavor_of(code) is op.flavor


def test_same_mnemonic_differs_by_flavor():
    assert lookup("rot_x").code != lookup("rot_x", Flavor.NV).code
    assert lookup("set", Flavor.NV) is lookup("set")


def test_signatures():
    assert signature(lookup("pmr_xyx")) == (I,) * 6
    assert signature(lookup("create_epr")) == (R,) * 5
    assert signature(lookup("recv_epr")) == (R,) * 4
    assert signature(lookup("cx_dir", Flavor.NV)) == (R, R, I, I)
    assert signature(lookup("beq")) == (R, R, I)


def test_branch_target_slot():
    assert branch_target_slot(lookup("jmp")) == 0
    assert branch_target_slot(lookup("bez")) == 1
    assert branch_target_slot(lookup("bge")) == 2
    assert branch_target_slot(lookup("add")) is None


def test_unknown_opcode():
    with pytest.raises(UnknownOpcode):
        opcode(0xFF)
    with pytest.raises(UnknownOpcode):
        lookup("cnot", Flavor.NV)


def test_register_byte_roundtrip():
    for name in RegName:
        for i in range(16):
            reg = Register(name, i)
            assert Register.from_byte(reg.to_byte()) == reg
            assert Register.parse(str(reg)) == reg
    with pytest.raises(ValueError):
        Register(RegName.R, 16)


def test_angles():
    assert AngleSpec.from_turns(Fraction(-1, 2)) == AngleSpec(-1, 1)
    assert angle_value(AngleSpec(3, 2)) == pytest.approx(3 * 3.141592653589793 / 4)
    with pytest.raises(AngleOverflow):
        AngleSpec.from_turns(Fraction(1, 2**31))
    with pytest.raises(ValueError):
        AngleSpec.from_turns(Fraction(1, 3))


def test_isa_table_lists_every_opcode():
    table = isa_table()
    assert table.count("\n") >= len(OPCODES)
    assert "| cx_dir | 0x" in table
