import numpy as np
import pytest

from nqasm.errors import NotCompletelyPositive, NotUnitary, NoSuchQubit, TooManyQubits
from nqasm.gates import CNOT, H, X, rot
from nqasm.qsim import (
    QuantumMemory,
    bell_state,
    check_channel,
    depolarize,
    depolarizing_probability,
    fidelity,
    werner_state,
)

ZERO = np.array([[1, 0], [0, 0]], dtype=complex)


@pytest.mark.parametrize("fid", [1.0, 0.997, 0.9, 0.5])
def test_depolarizing_closed_form(fid):
    p = depolarizing_probability(fid)
    out = depolarize(ZERO, 1, 0, p)
    expected = np.diag([1 - 2 * p / 3, 2 * p / 3])
    assert np.abs(out - expected).max() < 1e-12


def test_channel_positivity():
    check_channel(depolarizing_probability(0.25))
    with pytest.raises(NotCompletelyPositive):
        check_channel(1.5)


def test_werner_fidelity():
    for f in (1.0, 0.9, 0.5):
        assert fidelity(werner_state(f), bell_state()) == pytest.approx(f)


def test_bell_pair_by_gates():
    mem = QuantumMemory(rng=np.random.default_rng(0))
    mem.add_qubit(0)
    mem.add_qubit(1)
    mem.apply_gate(H, [0])
    mem.apply_gate(CNOT, [0, 1])
    assert mem.fidelity([0, 1], bell_state()) == pytest.approx(1.0)
    for g in mem.groups():
        g.check()


def test_measurement_collapses_and_keeps_qubit():
    mem = QuantumMemory(rng=np.random.default_rng(3))
    mem.make_epr_pair(0, 1)
    m0 = mem.measure(0)
    assert mem.has(0) and mem.has(1)
    assert mem.measure(1) == m0
    assert mem.reduced_state([0])[m0, m0] == pytest.approx(1.0)


def test_measurement_statistics():
    mem = QuantumMemory(rng=np.random.default_rng(11))
    ones = 0
    for _ in range(2000):
        mem.add_qubit(0)
        mem.apply_gate(rot("y", np.pi / 3), [0])
        ones += mem.measure(0)
        mem.free_qubit(0)
    assert ones / 2000 == pytest.approx(np.sin(np.pi / 6) ** 2, abs=0.03)


def test_measurement_flips():
    mem = QuantumMemory(rng=np.random.default_rng(5))
    flips = 0
    for _ in range(4000):
        mem.add_qubit(0)
        flips += mem.measure(0, prob_error_0=0.05)
        mem.free_qubit(0)
    assert flips / 4000 == pytest.approx(0.05, abs=0.015)


def test_gate_noise_reduces_fidelity():
    mem = QuantumMemory()
    mem.add_qubit(0)
    mem.apply_gate(X, [0], fidelity=0.9)
    p = depolarizing_probability(0.9)
    assert mem.reduced_state([0])[1, 1].real == pytest.approx(1 - 2 * p / 3)


def test_reduced_state_order():
    mem = QuantumMemory()
    for q in (0, 1):
        mem.add_qubit(q)
    mem.apply_gate(X, [1])
    rho = mem.reduced_state([1, 0])
    assert rho[2, 2].real == pytest.approx(1.0)


def test_errors():
    mem = QuantumMemory(max_group=2)
    with pytest.raises(NoSuchQubit):
        mem.measure(0)
    for q in range(3):
        mem.add_qubit(q)
    with pytest.raises(NotUnitary):
        mem.apply_gate(np.ones((2, 2)), [0])
    mem.apply_gate(CNOT, [0, 1])
    with pytest.raises(TooManyQubits):
        mem.apply_gate(CNOT, [1, 2])


def test_free_traces_out_partner():
    mem = QuantumMemory()
    mem.make_epr_pair(0, 1)
    mem.free_qubit(0)
    assert np.allclose(mem.reduced_state([1]), np.eye(2) / 2)
