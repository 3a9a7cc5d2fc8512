import numpy as np
import pytest

from nqasm.apps.common import bundled_program
from nqasm.asm import assemble
from nqasm.config import two_node_network
from nqasm.errors import BadModulus, Deadlock, InvalidBranch, WrongFlavor
from nqasm.host.runtime import EprSocket, RegistrationFailed, Runtime, run_network
from nqasm.qnpu import Scheduler

HEADER = "# NETQASM 1.0\n# APPID 0\n"
NOISELESS_NV = two_node_network(noiseless=True)
GENERIC = two_node_network(profile="generic")


def run_one(source, num_qubits=1, config=GENERIC, seed=0, inspect=None, node="alice"):
    """Run ``source`` as the only subroutine of a single app; returns (view, extra)."""

    def driver(ctx):
        yield from ctx.register(num_qubits)
        view = yield from ctx.execute(ctx.subroutine(source))
        extra = inspect(ctx) if inspect else None
        ctx.stop()
        return view, extra

    return run_network(config, {node: driver}, seed=seed).outputs[node]


def test_hadamard_statistics():
    ones = sum(run_one(bundled_program("hadamard"), seed=s)[0].reg("M0") for s in range(400))
    assert 0.42 < ones / 400 < 0.58


def test_hadamard_on_nv_node_is_translated():
    ones = sum(run_one(bundled_program("hadamard"), config=NOISELESS_NV, seed=s)[0].reg("M0") for s in range(200))
    assert 0.38 < ones / 200 < 0.62


def test_if_statement_resets_to_zero():
    for seed in range(20):
        _, rho = run_one(bundled_program("if_statement"), seed=seed, inspect=lambda ctx: ctx.qubit_state(0))
        assert rho[0, 0].real == pytest.approx(1.0)


def test_for_loop_fills_array():
    def inspect(ctx):
        return ctx.qnpu.app(ctx.app_id).shmem.array(0)

    _, arr = run_one(bundled_program("for_loop"), seed=4, inspect=inspect)
    assert len(arr) == 10 and all(v in (0, 1) for v in arr)
    assert 0 < sum(arr) < 10


def test_arrays_program_returns_sum():
    view, _ = run_one(bundled_program("arrays"))
    assert view.array(0) == (1, 2, 3)


def test_modular_arithmetic():
    src = HEADER + "set R0 7\nset R1 5\nset R2 4\naddm R3 R0 R1 R2\nsubm R4 R1 R0 R2\nret_reg R3\nret_reg R4\n"
    view, _ = run_one(src)
    assert view.reg("R3") == 0
    assert view.reg("R4") == 2  # (5 - 7) mod 4


def test_bad_modulus():
    with pytest.raises(BadModulus):
        run_one(HEADER + "set R0 1\nset R1 0\naddm R2 R0 R0 R1\n")


def test_integer_wraparound():
    src = HEADER + "set R0 2147483647\nset R1 1\nadd R2 R0 R1\nret_reg R2\n"
    assert run_one(src)[0].reg("R2") == -(2**31)


def test_invalid_branch():
    from nqasm.codec import decode, encode
    from nqasm.isa import Instruction, Subroutine, lookup

    bad = Subroutine(instructions=(Instruction(lookup("jmp"), (5,)),))

    def driver(ctx):
        yield from ctx.register(1)
        yield from ctx.execute(decode(encode(bad)))

    with pytest.raises(InvalidBranch):
        run_network(GENERIC, {"alice": driver})


def test_nv_subroutine_on_generic_node():
    with pytest.raises(WrongFlavor):
        run_one(HEADER + "# FLAVOR nv\nset Q0 0\nqalloc Q0\ninit Q0\n")


def epr_pair_programs(create_extra="", recv_extra="", pairs=1, etype=0):
    create = (
        HEADER
        + f"array {pairs} @0\n"
        + "".join(f"store {i} @0[{i}]\n" for i in range(pairs))
        + f"array 20 @1\nstore {etype} @1[0]\nstore {pairs} @1[1]\narray {10 * pairs} @2\n"
        + f"create_epr 1 0 @0 @1 @2\nwait_all @2[0:{10 * pairs}]\n"
        + create_extra
        + "ret_arr @2\n"
    )
    recv = (
        HEADER
        + f"array {pairs} @0\n"
        + "".join(f"store {i} @0[{i}]\n" for i in range(pairs))
        + f"array {10 * pairs} @1\nrecv_epr 0 0 @0 @1\nwait_all @1[0:{10 * pairs}]\n"
        + recv_extra
        + "ret_arr @1\n"
    )
    return create, recv


def run_pair(create, recv, config=GENERIC, seed=0, num_qubits=1):
    def make(src, peer, arr):
        def driver(ctx):
            yield from ctx.register(num_qubits, [EprSocket(peer)])
            view = yield from ctx.execute(ctx.subroutine(src))
            ctx.stop()
            return view

        return driver

    res = run_network(config, {"alice": make(create, "bob", 2), "bob": make(recv, "alice", 1)}, seed=seed)
    return res.outputs["alice"], res.outputs["bob"]


def test_epr_measurements_agree():
    create, recv = epr_pair_programs("set Q0 0\nmeas Q0 M0\nret_reg M0\n", "set Q0 0\nmeas Q0 M0\nret_reg M0\n")
    seen = set()
    for seed in range(30):
        a, b = run_pair(create, recv, seed=seed)
        assert a.reg("M0") == b.reg("M0")
        seen.add(a.reg("M0"))
    assert seen == {0, 1}


def test_epr_on_nv_nodes():
    create, recv = epr_pair_programs("set Q0 0\nmeas Q0 M0\nret_reg M0\n", "set Q0 0\nmeas Q0 M0\nret_reg M0\n")
    for seed in range(10):
        a, b = run_pair(create, recv, config=NOISELESS_NV, seed=seed)
        assert a.reg("M0") == b.reg("M0")


def test_two_pair_entinfo_records():
    create, recv = epr_pair_programs(pairs=2)
    a, b = run_pair(create, recv, num_qubits=2)
    link = GENERIC.links[0]
    for view, remote in ((a.array(2), 1), (b.array(1), 0)):
        assert len(view) == 20
        for i in range(2):
            rec = view[10 * i:10 * (i + 1)]
            assert rec[0] == i and rec[2] == i and rec[3] == remote and rec[4] == 0
            assert rec[5] == round(link.link_fidelity * 10_000)
            assert rec[6] == round(link.cycle_time / 1000)


def test_measure_directly_outcomes_correlate():
    create, recv = epr_pair_programs(pairs=3, etype=1)
    for seed in range(5):
        a, b = run_pair(create, recv, seed=seed, num_qubits=1)
        outa = a.array(2)[2::10]
        outb = b.array(1)[2::10]
        assert outa == outb and all(v in (0, 1) for v in outa)


def test_stop_app_releases_qubits():
    def driver(ctx):
        yield from ctx.register(2)
        yield from ctx.execute(ctx.subroutine(HEADER + "set Q0 0\nqalloc Q0\ninit Q0\nset Q1 1\nqalloc Q1\n"))
        used = len(ctx.runtime.memory.qubits())
        ctx.stop()
        return used

    rt = Runtime(GENERIC, 0)
    res = rt.run({"alice": driver})
    rt.scheduler.run()  # deliver the StopApp
    assert res.outputs["alice"] == 2
    qnpu = rt.qnpus["alice"]
    assert qnpu.apps == {}
    assert qnpu.free == list(range(qnpu.config.capacity))
    assert rt.memory.qubits() == []


def test_registration_errors():
    def too_big(ctx):
        yield from ctx.register(50)

    with pytest.raises(RegistrationFailed) as info:
        run_network(GENERIC, {"alice": too_big})
    assert info.value.error_code == 1

    def dup_sockets(ctx):
        yield from ctx.register(1, [EprSocket("bob"), EprSocket("bob")])

    with pytest.raises(RegistrationFailed) as info:
        run_network(GENERIC, {"alice": dup_sockets})
    assert info.value.error_code == 2


def test_deadlock_names_blocked_instruction():
    _, recv = epr_pair_programs()

    def driver(ctx):
        yield from ctx.register(1, [EprSocket("alice")])
        yield from ctx.execute(ctx.subroutine(recv))

    with pytest.raises(Deadlock) as info:
        run_network(GENERIC, {"bob": driver})
    text = str(info.value)
    assert "wait_all" in text and "bob" in text


def test_scheduler_orders_by_time_then_node():
    sched = Scheduler(0)
    seen = []
    sched.schedule(5, 1, lambda: seen.append("b5"))
    sched.schedule(5, 0, lambda: seen.append("a5"))
    sched.schedule(1, 3, lambda: seen.append("c1"))
    sched.schedule(5, 0, lambda: seen.append("a5'"))
    sched.run()
    assert seen == ["c1", "a5", "a5'", "b5"]
    assert sched.now == 5


def test_scheduler_rng_is_seeded():
    assert Scheduler(7).rng.random() == Scheduler(7).rng.random()
    assert np.isfinite(Scheduler(1).rng.random())
