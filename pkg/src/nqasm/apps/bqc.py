"""Blind computation on two remotely prepared, cphase-entangled server qubits.

Angles are integers in units of pi/4.  The client prepares each server qubit
by measuring its half of an EPR pair: ``rot_z theta; rot_y -pi/2`` leaves the
server qubit in Z^p Rz(theta)|+>, a direct measurement leaves it in |p>.

A trap round prepares one qubit in the XY plane (the trap) and the other in a
computational basis state (the dummy).  The server's answer for the trap qubit
is then fully determined by the client's secrets, so a wrong answer counts as
an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import NetworkConfig
from ..host.runtime import EprSocket, run_network
from .common import load_app, read_program

__all__ = ["BqcRound", "trap_rounds", "client_driver", "server_driver", "run_bqc_round", "trap_error_rate", "MODES"]

# scenario -> per-role host compile mode (None leaves vanilla code to the QNPU)
MODES = {
    "nv": {"client": "optimized", "server": "optimized"},
    "vanilla": {},
}


@dataclass(frozen=True)
class BqcRound:
    kind: str  # "compute" | "trap1" | "trap2"
    theta1: int
    theta2: int
    r: int = 0  # trap padding bit
    alpha: int = 0
    beta: int = 0


def _quarter(k: int) -> tuple[int, int]:
    """(n, d) of the angle k*pi/4, as NetQASM angle immediates."""
    return k % 8, 2


def _prep_defines(slot: str, theta: int, in_plane: bool) -> dict:
    if in_plane:
        zn, zd = _quarter(theta)
        yn, yd = -1, 1
    else:
        zn = zd = yn = yd = 0
    return {f"z{slot}_n": zn, f"z{slot}_d": zd, f"y{slot}_n": yn, f"y{slot}_d": yd}


def trap_rounds(thetas, per_theta: int, rng: np.random.Generator) -> list[BqcRound]:
    """``per_theta`` trap rounds for every (theta1, theta2) pair, trap position
    and padding bit drawn from ``rng``."""
    out = []
    for t1, t2 in thetas:
        for _ in range(per_theta):
            kind = "trap1" if rng.integers(2) == 0 else "trap2"
            out.append(BqcRound(kind, int(t1), int(t2), int(rng.integers(2))))
    return out


def client_driver(rnd: BqcRound, server: str, app=None):
    app = app or load_app("bqc")
    role = app.roles["client"]
    source = read_program(app, role["programs"][0])

    def driver(ctx):
        remote = ctx.runtime.config.node(server).id
        yield from ctx.register(role["num_qubits"], [EprSocket(server)])
        defines = {"remote": remote}
        defines.update(_prep_defines("1", rnd.theta1, rnd.kind != "trap2"))
        defines.update(_prep_defines("2", rnd.theta2, rnd.kind != "trap1"))
        view = yield from ctx.execute(ctx.subroutine(source, **defines))
        p2, p1 = view.reg("M0"), view.reg("M1")

        if rnd.kind == "compute":
            delta1 = rnd.alpha - rnd.theta1 + 4 * p1
        elif rnd.kind == "trap1":
            delta1 = -rnd.theta1 + 4 * (p1 + rnd.r)
        else:
            delta1 = 4 * rnd.r
        ctx.send(server, _quarter(delta1))
        m1 = yield from ctx.recv(server)

        if rnd.kind == "compute":
            # only the computation angle follows the X byproduct; the
            # padding angle theta2 sits on the other side of it
            delta2 = (-1) ** m1 * rnd.beta - rnd.theta2 + 4 * p2
        elif rnd.kind == "trap2":
            delta2 = -rnd.theta2 + 4 * (p2 + rnd.r)
        else:
            delta2 = 4 * rnd.r
        ctx.send(server, _quarter(delta2))
        m2 = yield from ctx.recv(server)
        ctx.stop()

        out = {"kind": rnd.kind, "p1": p1, "p2": p2, "m1": m1, "m2": m2}
        if rnd.kind == "trap1":
            out["trap_failed"] = int(m1 != p2 ^ rnd.r)
        elif rnd.kind == "trap2":
            out["trap_failed"] = int(m2 != p1 ^ rnd.r)
        return out

    return driver


def server_driver(client: str, app=None):
    app = app or load_app("bqc")
    role = app.roles["server"]
    prep_src, meas_src = (read_program(app, p) for p in role["programs"])

    def driver(ctx):
        remote = ctx.runtime.config.node(client).id
        yield from ctx.register(role["num_qubits"], [EprSocket(client)])
        yield from ctx.execute(ctx.subroutine(prep_src, remote=remote))
        results = []
        for q in (0, 1):
            n, d = yield from ctx.recv(client)
            view = yield from ctx.execute(ctx.subroutine(meas_src, q=q, delta_n=n, delta_d=d))
            results.append(view.reg("M0"))
            ctx.send(client, results[-1])
        ctx.stop()
        return {"m1": results[0], "m2": results[1]}

    return driver


def run_bqc_round(config: NetworkConfig, rnd: BqcRound, seed: int, mode: str = "nv", app=None):
    app = app or load_app("bqc")
    client = app.roles["client"]["node"]
    server = app.roles["server"]["node"]
    programs = {client: client_driver(rnd, server, app), server: server_driver(client, app)}
    roles = {"client": client, "server": server}
    modes = {roles[role]: m for role, m in MODES[mode].items()}
    return run_network(config, programs, seed=seed, compile_modes=modes)


def trap_error_rate(config: NetworkConfig, rounds: list[BqcRound], seed: int, mode: str = "nv", app=None):
    """(error rate, standard error, results) over ``rounds``; round i runs
    under seed ``seed + i``."""
    app = app or load_app("bqc")
    client = app.roles["client"]["node"]
    results = [run_bqc_round(config, rnd, seed + i, mode, app) for i, rnd in enumerate(rounds)]
    fails = [r.outputs[client]["trap_failed"] for r in results]
    n = len(fails)
    rate = sum(fails) / n if n else 0.0
    se = math.sqrt(rate * (1 - rate) / n) if n else 0.0
    return rate, se, results
