import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nqasm.apps.common import bundled_program
from nqasm.apps.teleport import run_teleport
from nqasm.asm import assemble
from nqasm.codec import encode
from nqasm.config import two_node_network
from nqasm.errors import NoSuchApp, PeerClosed, ProtocolOrder, Truncated, UnknownMessageType
from nqasm.host.messages import (
    Done,
    EprSocketSpec,
    MemoryUpdate,
    RegisterApp,
    RegisterAppErr,
    RegisterAppOK,
    StopApp,
    SubroutineMsg,
    decode_message,
    encode_message,
)
from nqasm.host.runtime import EprSocket, run_network
from nqasm.host.trace import protocol_violations
from nqasm.isa import Register, RegName

HEADER = "# NETQASM 1.0\n# APPID 0\n"
GENERIC = two_node_network(profile="generic")
NOISELESS_NV = two_node_network(noiseless=True)

i32 = st.integers(-(2**31), 2**31 - 1)
registers = st.builds(Register, st.sampled_from(list(RegName)), st.integers(0, 15))
sockets = st.builds(EprSocketSpec, i32, i32, i32, i32)
messages = st.one_of(
    st.builds(RegisterApp, i32, i32, st.lists(sockets, max_size=3).map(tuple)),
    st.builds(RegisterAppOK, i32, i32),
    st.builds(RegisterAppErr, i32, i32),
    st.builds(SubroutineMsg, i32, i32, st.binary(max_size=64)),
    st.builds(Done, i32),
    st.builds(
        MemoryUpdate,
        i32,
        i32,
        st.dictionaries(registers, i32, max_size=4),
        st.dictionaries(st.integers(0, 100), st.lists(st.one_of(st.none(), i32), max_size=5).map(tuple), max_size=3),
    ),
    st.builds(StopApp, i32, i32),
)


@settings(max_examples=300, deadline=None)
@given(messages)
def test_message_roundtrip(msg):
    assert decode_message(encode_message(msg)) == msg


def test_register_app_ok_roundtrip():
    assert decode_message(encode_message(RegisterAppOK(0, 0))) == RegisterAppOK(0, 0)


def test_subroutine_message_carries_binary_exactly():
    data = encode(assemble(bundled_program("hadamard")))
    msg = decode_message(encode_message(SubroutineMsg(3, 0, data)))
    assert msg.subroutine == data


def test_frame_errors():
    with pytest.raises(UnknownMessageType):
        decode_message(bytes([0xFF]) + b"\x00" * 8)
    frame = encode_message(StopApp(1, 2))
    with pytest.raises(Truncated):
        decode_message(frame[:-1])
    with pytest.raises(Truncated):
        decode_message(frame[:5])
    with pytest.raises(Truncated):
        decode_message(frame + b"\x00")


def test_teleport_trace_follows_protocol():
    res = run_teleport(NOISELESS_NV, "+", seed=2)
    assert protocol_violations(res.trace) == []
    kinds = [e.kind for e in res.trace if e.node == "bob"]
    assert kinds[:2] == ["RegisterApp", "RegisterAppOK"] and kinds[-1] == "StopApp"
    assert kinds.count("SubroutineMsg") == kinds.count("Done") == 2


def test_done_refers_to_a_sent_subroutine():
    res = run_teleport(NOISELESS_NV, "0", seed=2)
    for node in ("alice", "bob"):
        sent = {e.message_id for e in res.trace if e.node == node and e.kind == "SubroutineMsg"}
        done = {e.message_id for e in res.trace if e.node == node and e.kind == "Done"}
        assert done == sent


def test_protocol_checker_flags_bad_streams():
    from nqasm.host.runtime import TraceEntry

    def entries(*kinds):
        return [TraceEntry("n", "to_qnpu", k, 0, 0, 0.0) for k in kinds]

    assert protocol_violations(entries("RegisterApp", "RegisterAppErr")) == []
    assert protocol_violations(entries("RegisterApp", "RegisterAppOK", "Done", "StopApp")) == ["n"]
    assert protocol_violations(entries("RegisterApp", "RegisterAppOK", "SubroutineMsg", "Done")) == ["n"]


def test_qubit_persists_across_subroutines():
    # subroutine 1 leaves the qubit in |1>, subroutine 2 measures it
    def driver(ctx):
        yield from ctx.register(1)
        yield from ctx.execute(ctx.subroutine(HEADER + "set Q0 0\nqalloc Q0\ninit Q0\nx Q0\n"))
        rho = ctx.qubit_state(0)
        view = yield from ctx.execute(ctx.subroutine(HEADER + "set Q0 0\nmeas Q0 M0\nret_reg M0\n"))
        ctx.stop()
        return rho, view.reg("M0")

    for config in (GENERIC, NOISELESS_NV):
        rho, m = run_network(config, {"alice": driver}).outputs["alice"]
        assert rho[1, 1].real == pytest.approx(1.0) and m == 1


def test_entangled_qubit_used_by_second_subroutine():
    create = HEADER + (
        "array 1 @0\nstore 0 @0[0]\narray 20 @1\narray 10 @2\n"
        "create_epr 1 0 @0 @1 @2\nwait_all @2[0:10]\nset Q0 0\nmeas Q0 M0\nret_reg M0\n"
    )
    recv = HEADER + "array 1 @0\nstore 0 @0[0]\narray 10 @1\nrecv_epr 0 0 @0 @1\nwait_all @1[0:10]\n"

    def alice(ctx):
        yield from ctx.register(1, [EprSocket("bob")])
        view = yield from ctx.execute(ctx.subroutine(create))
        ctx.send("bob", "measured")
        ctx.stop()
        return view.reg("M0")

    def bob(ctx):
        yield from ctx.register(1, [EprSocket("alice")])
        yield from ctx.execute(ctx.subroutine(recv))
        assert (yield from ctx.recv("alice")) == "measured"
        view = yield from ctx.execute(ctx.subroutine(HEADER + "set Q0 0\nmeas Q0 M0\nret_reg M0\n"))
        ctx.stop()
        return view.reg("M0")

    for seed in range(10):
        out = run_network(GENERIC, {"alice": alice, "bob": bob}, seed=seed).outputs
        assert out["alice"] == out["bob"]


def test_subroutine_before_registration():
    def driver(ctx):
        yield from ctx.execute(HEADER + "set R0 1\n")

    with pytest.raises(ProtocolOrder):
        run_network(GENERIC, {"alice": driver})


def test_subroutine_after_stop():
    def driver(ctx):
        yield from ctx.register(1)
        sub = ctx.subroutine(HEADER + "set R0 1\n")
        ctx.stop()
        yield from ctx.execute(sub)

    with pytest.raises(NoSuchApp):
        run_network(GENERIC, {"alice": driver})


def test_classical_fifo_and_blocking_recv():
    def alice(ctx):
        got = []
        for _ in range(3):
            got.append((yield from ctx.recv("bob")))
        return got

    def bob(ctx):
        yield from ctx.register(1)
        yield from ctx.execute(ctx.subroutine(HEADER + "set R0 1\n"))
        for v in (1, [2, 3], "four"):
            ctx.send("alice", v)
        return None

    assert run_network(GENERIC, {"alice": alice, "bob": bob}).outputs["alice"] == [1, [2, 3], "four"]


def test_send_to_stopped_peer():
    def alice(ctx):
        yield from ctx.register(1)
        ctx.stop()
        return None

    def bob(ctx):
        yield from ctx.register(1)
        yield from ctx.execute(ctx.subroutine(HEADER + "set R0 1\n"))
        ctx.send("alice", 1)

    with pytest.raises(PeerClosed):
        run_network(GENERIC, {"alice": alice, "bob": bob})


def test_same_seed_same_result():
    a = run_teleport(two_node_network(), "+i", seed=9)
    b = run_teleport(two_node_network(), "+i", seed=9)
    assert a.outputs == b.outputs and a.metrics == b.metrics and a.trace == b.trace
