"""Teleportation: the sender teleports one of the six Pauli eigenstates."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..config import NetworkConfig
from ..gates import rot
from ..host.runtime import EprSocket, run_network
from ..isa import AngleSpec
from ..qsim import fidelity
from .common import load_app, read_program

__all__ = ["PAULI_STATES", "state_vector", "sender_driver", "receiver_driver", "run_teleport"]

# name -> (theta, phi) in turns of pi; the state is Rz(phi) Ry(theta) |0>
PAULI_STATES = {
    "0": (Fraction(0), Fraction(0)),
    "1": (Fraction(1), Fraction(0)),
    "+": (Fraction(1, 2), Fraction(0)),
    "-": (Fraction(1, 2), Fraction(1)),
    "+i": (Fraction(1, 2), Fraction(1, 2)),
    "-i": (Fraction(1, 2), Fraction(-1, 2)),
}


def state_vector(name: str) -> np.ndarray:
    theta, phi = PAULI_STATES[name]
    return rot("z", float(phi) * np.pi) @ rot("y", float(theta) * np.pi) @ np.array([1, 0], dtype=complex)


def _angle_defines(name: str) -> dict:
    theta, phi = (AngleSpec.from_turns(t) for t in PAULI_STATES[name])
    return {"theta_n": theta.n, "theta_d": theta.d, "phi_n": phi.n, "phi_d": phi.d}


def sender_driver(state: str, receiver: str, app=None):
    app = app or load_app("teleport")
    role = app.roles["sender"]
    source = read_program(app, role["programs"][0])

    def driver(ctx):
        remote = ctx.runtime.config.node(receiver).id
        yield from ctx.register(role["num_qubits"], [EprSocket(receiver)])
        sub = ctx.subroutine(source, remote=remote, **_angle_defines(state))
        view = yield from ctx.execute(sub)
        m1, m2 = view.reg("M0"), view.reg("M1")
        ctx.send(receiver, [m1, m2])
        ctx.stop()
        return {"m1": m1, "m2": m2}

    return driver


def receiver_driver(state: str, sender: str, app=None):
    app = app or load_app("teleport")
    role = app.roles["receiver"]
    recv_src, corr_src = (read_program(app, p) for p in role["programs"])
    psi = state_vector(state)

    def driver(ctx):
        remote = ctx.runtime.config.node(sender).id
        yield from ctx.register(role["num_qubits"], [EprSocket(sender)])
        yield from ctx.execute(ctx.subroutine(recv_src, remote=remote))
        m1, m2 = yield from ctx.recv(sender)
        # the received qubit stays in memory between the two subroutines
        yield from ctx.execute(ctx.subroutine(corr_src, m1=m1, m2=m2))
        fid = fidelity(ctx.qubit_state(0), psi)
        ctx.stop()
        return {"fidelity": fid}

    return driver


def run_teleport(
    config: NetworkConfig,
    state: str,
    seed: int,
    sender_mode: str | None = "optimized",
    sender: str | None = None,
    receiver: str | None = None,
    app=None,
):
    """One teleportation shot; returns the NetworkResult."""
    app = app or load_app("teleport")
    sender = sender or app.roles["sender"]["node"]
    receiver = receiver or app.roles["receiver"]["node"]
    programs = {
        sender: sender_driver(state, receiver, app),
        receiver: receiver_driver(state, sender, app),
    }
    modes = {sender: sender_mode} if sender_mode else {}
    return run_network(config, programs, seed=seed, compile_modes=modes)
