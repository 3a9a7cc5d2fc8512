"""Apps whose programs need no classical input: every role runs its listings
in order and returns the registers they hand back."""

from __future__ import annotations

from ..config import NetworkConfig
from ..host.runtime import EprSocket, run_network
from .common import App, read_program

__all__ = ["static_driver", "run_static"]


def static_driver(app: App, role: str):
    spec = app.roles[role]
    sources = [read_program(app, p) for p in spec["programs"]]
    peer = spec.get("peer")

    def driver(ctx):
        sockets = [EprSocket(peer)] if peer else []
        yield from ctx.register(spec.get("num_qubits", 1), sockets)
        defines = {"remote": ctx.runtime.config.node(peer).id} if peer else {}
        returned = {}
        for src in sources:
            view = yield from ctx.execute(ctx.subroutine(src, **defines))
            returned.update({str(reg): value for reg, value in view.registers.items()})
        ctx.stop()
        return returned

    return driver


def run_static(config: NetworkConfig, app: App, seed: int, compile_modes: dict | None = None):
    programs = {spec["node"]: static_driver(app, role) for role, spec in app.roles.items()}
    return run_network(config, programs, seed=seed, compile_modes=compile_modes)
