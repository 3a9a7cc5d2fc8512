"""Multi-shot execution of a bundled or user app and the run report."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..config import NetworkConfig
from .bqc import run_bqc_round, trap_rounds
from .common import App
from .static import run_static
from .teleport import run_teleport

__all__ = ["shot_seed", "run_shots", "APP_MODES"]

# accepted --mode values per app kind; the first is the default
APP_MODES = {
    "teleport": ["app", "optimized", "num", "adhoc", "vanilla"],
    "bqc": ["nv", "vanilla"],
    "static": ["vanilla", "optimized"],
}


def shot_seed(seed: int, shot: int) -> int:
    """Per-shot seed derived from the run seed; independent of how shots are scheduled."""
    return int(np.random.SeedSequence([seed, shot]).generate_state(1)[0])


def _teleport_shot(config, app, seed, i, mode):
    states = app.data.get("states", ["0"])
    state = states[i % len(states)]
    if mode == "app":
        sender_mode = app.roles["sender"].get("compile")
    else:
        sender_mode = None if mode == "vanilla" else mode
    res = run_teleport(config, state, shot_seed(seed, i), sender_mode=sender_mode, app=app)
    return res, {"state": state}


def _static_shot(config, app, seed, i, mode):
    modes = {} if mode == "vanilla" else {spec["node"]: mode for spec in app.roles.values()}
    return run_static(config, app, shot_seed(seed, i), modes), {}


def run_shots(config: NetworkConfig, app: App, seed: int, shots: int, mode: str | None = None, jobs: int = 1) -> dict:
    """Run ``shots`` independent shots and build the report dictionary."""
    kind = app.kind
    if kind not in APP_MODES:
        raise ValueError(f"unknown app kind {kind!r}")
    mode = mode or APP_MODES[kind][0]
    if mode not in APP_MODES[kind]:
        raise ValueError(f"mode {mode!r} does not apply to {kind} apps (choose from {', '.join(APP_MODES[kind])})")

    if kind == "bqc":
        per = math.ceil(shots / len(app.data["thetas"]))
        rounds = trap_rounds(app.data["thetas"], per, np.random.default_rng(seed))[:shots]

        def one(i):
            res = run_bqc_round(config, rounds[i], shot_seed(seed, i), mode, app)
            rnd = rounds[i]
            return res, {"theta1": rnd.theta1, "theta2": rnd.theta2, "r": rnd.r}
    elif kind == "teleport":
        def one(i):
            return _teleport_shot(config, app, seed, i, mode)
    else:
        def one(i):
            return _static_shot(config, app, seed, i, mode)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, range(shots)))
    else:
        results = [one(i) for i in range(shots)]

    shot_records = []
    counts: dict[str, dict[str, int]] = {}
    total_time = 0.0
    for i, (res, extra) in enumerate(results):
        shot_records.append({"shot": i, "seed": shot_seed(seed, i), **extra, "outputs": res.outputs})
        total_time += max(m["end_time_ns"] for m in res.metrics.values())
        for node, m in res.metrics.items():
            acc = counts.setdefault(node, {})
            for key, value in m.items():
                if key != "end_time_ns":
                    acc[key] = acc.get(key, 0) + int(value)

    metrics: dict = {"total_logical_time_ns": total_time, "gate_counts": counts}
    if kind == "teleport":
        receiver = app.roles["receiver"]["node"]
        fids = [r.outputs[receiver]["fidelity"] for r, _ in results]
        metrics["mean_fidelity"] = float(np.mean(fids)) if fids else None
    elif kind == "bqc":
        client = app.roles["client"]["node"]
        fails = [r.outputs[client]["trap_failed"] for r, _ in results]
        rate = sum(fails) / len(fails) if fails else 0.0
        metrics["trap_error_rate"] = rate
        metrics["trap_error_se"] = math.sqrt(rate * (1 - rate) / len(fails)) if fails else 0.0

    return {
        "app": kind,
        "mode": mode,
        "seed": seed,
        "shots": shots,
        "config_digest": config.digest(),
        "metrics": metrics,
        "shot_results": shot_records,
    }
