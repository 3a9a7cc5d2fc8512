import numpy as np
import pytest

from nqasm.apps.bqc import BqcRound, run_bqc_round, trap_error_rate, trap_rounds
from nqasm.apps.common import load_app
from nqasm.apps.runner import run_shots, shot_seed
from nqasm.apps.static import run_static
from nqasm.apps.teleport import PAULI_STATES, run_teleport
from nqasm.config import two_node_network
from nqasm.errors import ConfigError
from nqasm.gates import H, rot

NOISELESS = two_node_network(noiseless=True)


@pytest.mark.parametrize("mode", ["optimized", "num", "adhoc", None])
def test_noiseless_teleport_all_states(mode):
    for state in PAULI_STATES:
        res = run_teleport(NOISELESS, state, seed=3, sender_mode=mode)
        assert res.outputs["bob"]["fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_teleport_on_generic_nodes():
    cfg = two_node_network(profile="generic")
    for state in PAULI_STATES:
        assert run_teleport(cfg, state, seed=1).outputs["bob"]["fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_teleport_metrics_report_moves():
    optimized = run_teleport(NOISELESS, "+", seed=0, sender_mode="optimized").metrics["alice"]
    num = run_teleport(NOISELESS, "+", seed=0, sender_mode="num").metrics["alice"]
    assert (optimized["moves"], num["moves"]) == (2, 4)
    assert optimized["end_time_ns"] < num["end_time_ns"]


@pytest.mark.parametrize("mode", ["nv", "vanilla"])
def test_noiseless_trap_rounds_never_fail(mode):
    rounds = trap_rounds([[0, 0], [0, 1], [1, 0], [1, 1]], 10, np.random.default_rng(0))
    rate, se, _ = trap_error_rate(NOISELESS, rounds, seed=0, mode=mode)
    assert rate == 0.0 and se == 0.0


def _ideal_m2_one(alpha, beta):
    plus = np.array([1, 1]) / np.sqrt(2)
    v = H @ rot("z", beta * np.pi / 4) @ H @ rot("z", alpha * np.pi / 4) @ plus
    return abs(v[1]) ** 2


@pytest.mark.parametrize("alpha, beta", [(2, 2), (2, 6), (6, 2), (0, 0), (4, 4)])
def test_compute_round_matches_ideal_circuit(alpha, beta):
    p1 = _ideal_m2_one(alpha, beta)
    for seed in range(8):
        rnd = BqcRound("compute", theta1=3, theta2=5, alpha=alpha, beta=beta)
        m2 = run_bqc_round(NOISELESS, rnd, seed, "vanilla").outputs["alice"]["m2"]
        if p1 < 1e-9:
            assert m2 == 0
        elif p1 > 1 - 1e-9:
            assert m2 == 1


def test_nv_server_uses_fewer_operations():
    rnd = BqcRound("trap1", 1, 0)
    nv = run_bqc_round(NOISELESS, rnd, 0, "nv").metrics["bob"]
    vanilla = run_bqc_round(NOISELESS, rnd, 0, "vanilla").metrics["bob"]
    assert nv["quantum_ops"] < vanilla["quantum_ops"]


def test_static_epr_app():
    app = load_app("epr")
    for seed in range(6):
        out = run_static(NOISELESS, app, seed).outputs
        assert out["alice"]["M0"] == out["bob"]["M0"]


def test_load_app_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_app(tmp_path)


def test_run_shots_report():
    report = run_shots(NOISELESS, load_app("teleport"), seed=5, shots=12)
    assert report["metrics"]["mean_fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert [r["state"] for r in report["shot_results"][:6]] == list(PAULI_STATES)
    assert report["config_digest"] == NOISELESS.digest()
    assert report["shot_results"][3]["seed"] == shot_seed(5, 3)


def test_run_shots_threads_match_serial():
    app = load_app("bqc")
    a = run_shots(NOISELESS, app, seed=1, shots=8)
    b = run_shots(NOISELESS, app, seed=1, shots=8, jobs=3)
    assert a == b


def test_run_shots_rejects_unknown_mode():
    with pytest.raises(ValueError):
        run_shots(NOISELESS, load_app("bqc"), seed=1, shots=1, mode="num")
