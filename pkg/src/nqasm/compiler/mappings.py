"""Frozen vanilla -> NV gate tables.

Each entry is a list of ``(nv mnemonic, roles, angle)`` with the angle as an
exact multiple of pi.  Roles are ``"q"`` for single-qubit gates and ``"C"``
(communication) / ``"S"`` (storage) for two-qubit gates; controlled rotations
always take the communication qubit as control.

The ``h``, ``cnot`` and ``cphase`` tables are the published mappings, except
that the seventh step of ``cnot S C`` is ``rot_y S -pi/2`` (the published
``+pi/2`` does not give a CNOT).  ``k`` and both move composites were found by
exhaustive search over short native sequences; every table is checked against
the unitary oracle in the test suite.
"""

from __future__ import annotations

from fractions import Fraction

HALF = Fraction(1, 2)
ONE = Fraction(1)

ONE_QUBIT = {
    "x": [("rot_x", ("q",), ONE)],
    "y": [("rot_y", ("q",), ONE)],
    "z": [("rot_z", ("q",), ONE)],
    "h": [("rot_y", ("q",), HALF), ("rot_x", ("q",), ONE)],
    "s": [("rot_z", ("q",), HALF)],
    "t": [("rot_z", ("q",), Fraction(1, 4))],
    "k": [("rot_x", ("q",), HALF), ("rot_z", ("q",), ONE)],
}

CNOT_CS = [
    ("cx_dir", ("C", "S"), HALF),
    ("rot_z", ("C",), -HALF),
    ("rot_x", ("S",), -HALF),
]

CNOT_SC = [
    ("rot_y", ("C",), HALF),
    ("rot_x", ("C",), ONE),
    ("rot_y", ("S",), HALF),
    ("cx_dir", ("C", "S"), HALF),
    ("rot_z", ("C",), -HALF),
    ("rot_x", ("S",), -HALF),
    ("rot_y", ("S",), -HALF),
    ("rot_y", ("C",), HALF),
    ("rot_x", ("C",), ONE),
]

CPHASE_CS = [
    ("rot_y", ("S",), HALF),
    ("cx_dir", ("C", "S"), HALF),
    ("rot_z", ("C",), -HALF),
    ("rot_x", ("S",), -HALF),
    ("rot_y", ("S",), -HALF),
]

# keyed by (gate, role of first operand, role of second operand)
TWO_QUBIT = {
    ("cnot", "C", "S"): CNOT_CS,
    ("cnot", "S", "C"): CNOT_SC,
    ("cphase", "C", "S"): CPHASE_CS,
    ("cphase", "S", "C"): CPHASE_CS,
}

# Move composites.  Preconditions: the destination qubit is freshly
# initialised to |0>.  Afterwards the destination holds the source state and
# the source is left in a fixed product state that is then freed.
MOVE_TO_STORAGE = [
    ("rot_x", ("C",), HALF),
    ("cx_dir", ("C", "S"), -HALF),
    ("rot_y", ("C",), HALF),
    ("cy_dir", ("C", "S"), -HALF),
]

MOVE_TO_COMM = [
    ("rot_x", ("C",), HALF),
    ("cy_dir", ("C", "S"), HALF),
    ("rot_y", ("C",), HALF),
    ("cx_dir", ("C", "S"), HALF),
    ("rot_x", ("C",), HALF),
]

# Without platform-specific optimisation a move is a swap with |0>: two
# vanilla CNOTs, each lowered through the fixed tables above.
MOVE_TO_STORAGE_ADHOC = CNOT_CS + CNOT_SC
MOVE_TO_COMM_ADHOC = CNOT_SC + CNOT_CS
