import warnings

import pytest

from nqasm.apps.common import bundled_program
from nqasm.asm import (
    ReservedRegisterWarning,
    assemble,
    lowered_count,
    parse,
    preprocess,
    resolve,
    to_symbolic,
    to_text,
)
from nqasm.errors import (
    DirectiveOrder,
    DuplicateLabel,
    MissingDirective,
    ResolveError,
    SignatureMismatch,
    UndefinedLabel,
    UndefinedMacro,
    UnknownMnemonic,
)
from nqasm.isa import Flavor

GOLDEN_BRANCH_VARIABLES = """\
set R0 0
beq R0 10 7
bge R0 5 5
add R0 R0 1
jmp 6
add R0 R0 2
jmp 1
"""

HEADER = "# NETQASM 1.0\n# APPID 0\n"


def body(sub):
    return "".join(f"{ins}\n" for ins in sub)


def test_branch_variables_golden():
    sub = assemble(bundled_program("branch_variables"), lower=False)
    assert body(sub) == GOLDEN_BRANCH_VARIABLES
    targets = [ins.operands[-1] for ins in sub if ins.mnemonic in ("beq", "bge", "jmp")]
    assert targets == [7, 5, 6, 1]


def test_branch_variables_lowered_keeps_targets_consistent():
    sub = assemble(bundled_program("branch_variables"))
    # every immediate in a register slot became a scratch set
    assert all(ins.mnemonic != "beq" or str(ins.operands[1]).startswith("R1") for ins in sub)
    for ins in sub:
        if ins.mnemonic in ("jmp", "beq", "bge"):
            assert 0 <= ins.operands[-1] <= len(sub)


def test_for_loop_two_lowered_sets():
    meta, text = preprocess(bundled_program("for_loop"))
    sym = parse(text, meta)
    assert lowered_count(sym) == 2
    assert len(resolve(sym)) == 14


def test_bundled_programs_assemble():
    for name in ("hadamard", "if_statement", "for_loop", "branch_variables", "arrays", "epr_create", "epr_recv"):
        sub = assemble(bundled_program(name))
        assert len(sub) > 0


def test_defines_and_overrides():
    src = HEADER + "# DEFINE v 3\nset R0 $v\n"
    assert assemble(src).instructions[0].operands[1] == 3
    assert assemble(src, defines={"v": 9}).instructions[0].operands[1] == 9


def test_comments_and_labels_on_same_line():
    src = HEADER + "// a comment\nA: B: set R0 1 // trailing\njmp B\n"
    sub = assemble(src)
    assert body(sub) == "set R0 1\njmp 0\n"


def test_canonical_text_roundtrip():
    sub = assemble(bundled_program("for_loop"))
    assert assemble(to_text(sub)) == sub


def test_to_symbolic_uses_index_labels():
    sub = assemble(bundled_program("branch_variables"), lower=False)
    names = [str(item) for item in to_symbolic(sub).items if not hasattr(item, "opcode")]
    assert "_L7" in names and "_L1" in names
    assert resolve(to_symbolic(sub), lower=False) == sub


def test_nv_flavor_directive():
    sub = assemble(HEADER + "# FLAVOR nv\nset Q0 0\nrot_x Q0 1 1\n")
    assert sub.flavor is Flavor.NV
    assert "# FLAVOR nv" in to_text(sub)


@pytest.mark.parametrize(
    "src, err",
    [
        ("# APPID 0\nset R0 1\n", MissingDirective),
        ("# NETQASM 1.0\nset R0 1\n", MissingDirective),
        (HEADER + "set R0 $nope\n", UndefinedMacro),
        (HEADER + "set R0 1\n# DEFINE x 1\n", DirectiveOrder),
        (HEADER + "frobnicate R0\n", UnknownMnemonic),
        (HEADER + "set R0\n", SignatureMismatch),
        (HEADER + "A:\nA:\n", DuplicateLabel),
        (HEADER + "jmp NOWHERE\n", UndefinedLabel),
        (HEADER + "jmp 5\n", ResolveError),
    ],
)
def test_errors(src, err):
    with pytest.raises(err):
        assemble(src)


def test_error_carries_line_number():
    with pytest.raises(UnknownMnemonic) as info:
        assemble(HEADER + "\n\nbogus R0\n")
    assert info.value.line == 5


def test_scratch_register_clash_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assemble(HEADER + "set R15 1\nbeq R15 10 0\n")
    assert any(issubclass(w.category, ReservedRegisterWarning) for w in caught)
