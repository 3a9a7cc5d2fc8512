"""Gate matrices for the vanilla and NV flavors.

Rotations follow R_a(θ) = exp(-iθσ_a/2).  The NV controlled rotations act
as Rx(±α) (resp. Ry) on the target depending on the control state, with the
control as the first (most significant) qubit.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
K = np.array([[1, -1j], [1j, -1]], dtype=complex) / np.sqrt(2)
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CPHASE = np.diag([1, 1, 1, -1]).astype(complex)

PAULIS = {"x": X, "y": Y, "z": Z}
FIXED_1Q = {"x": X, "y": Y, "z": Z, "h": H, "s": S, "k": K, "t": T}
FIXED_2Q = {"cnot": CNOT, "cphase": CPHASE}


def rot(axis: str, theta: float) -> np.ndarray:
    sigma = PAULIS[axis]
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * sigma


def controlled_dir(axis: str, alpha: float) -> np.ndarray:
    """diag(R_axis(α), R_axis(-α)) with the control qubit first."""
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = rot(axis, alpha)
    out[2:, 2:] = rot(axis, -alpha)
    return out


def gate_matrix(mnemonic: str, angle: float | None = None) -> np.ndarray:
    """Matrix for a gate mnemonic of either flavor; angle in radians."""
    if mnemonic in FIXED_1Q:
        return FIXED_1Q[mnemonic]
    if mnemonic in FIXED_2Q:
        return FIXED_2Q[mnemonic]
    if mnemonic.startswith("rot_"):
        return rot(mnemonic[-1], angle)
    if mnemonic in ("cx_dir", "cy_dir"):
        return controlled_dir(mnemonic[1], angle)
    raise KeyError(mnemonic)
