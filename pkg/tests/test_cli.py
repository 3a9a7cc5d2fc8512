import json

import pytest

from nqasm.apps.common import DATA_DIR, bundled_program
from nqasm.cli import main
from nqasm.codec import decode

SENDER = str(DATA_DIR / "apps" / "teleport" / "sender.nqasm")


def test_assemble_disassemble_roundtrip(tmp_path, capsys):
    src = tmp_path / "loop.nqasm"
    src.write_text(bundled_program("for_loop"))
    out = tmp_path / "loop.nqbin"
    assert main(["assemble", str(src), "-o", str(out)]) == 0
    assert "2 lowered set insertions" in capsys.readouterr().out
    decode(out.read_bytes())
    text = tmp_path / "loop.txt"
    assert main(["disassemble", str(out), "-o", str(text)]) == 0
    again = tmp_path / "again.nqasm"
    again.write_text(text.read_text())
    assert main(["assemble", str(again), "-o", str(tmp_path / "again.nqbin")]) == 0
    assert (tmp_path / "again.nqbin").read_bytes() == out.read_bytes()


def test_assemble_missing_directive(tmp_path, capsys):
    src = tmp_path / "bad.nqasm"
    src.write_text("# NETQASM 1.0\nset R0 1\n")
    assert main(["assemble", str(src)]) == 1
    assert "MissingDirective" in capsys.readouterr().err


@pytest.mark.parametrize("flag, moves", [("--optimized", 2), ("--adhoc-order", 4), ("--adhoc", 4)])
def test_compile_reports_moves(flag, moves, capsys):
    assert main(["compile", "--flavor", "nv", "--unit-module", "nv_unit_module", flag, SENDER]) == 0
    assert f"moves: {moves}" in capsys.readouterr().out


def test_compile_rejects_generic_module(capsys):
    assert main(["compile", "--flavor", "nv", "--unit-module", "generic_unit_module", SENDER]) == 1
    assert "CompileError" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["compile"])
    assert info.value.code == 1


def test_run_is_deterministic(tmp_path):
    reports = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        args = ["run", "--network", "nv_default", "--app", "teleport", "--seed", "4", "--shots", "6", "--report", str(path)]
        assert main(args) == 0
        reports.append(path.read_bytes())
    assert reports[0] == reports[1]
    report = json.loads(reports[0])
    assert report["seed"] == 4 and len(report["config_digest"]) == 64


def test_run_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NQASM_SEED", "17")
    path = tmp_path / "r.json"
    assert main(["run", "--network", "nv_noiseless", "--app", "epr", "--report", str(path)]) == 0
    assert json.loads(path.read_text())["seed"] == 17


def test_run_deadlock_exit_code(tmp_path, capsys):
    app = tmp_path / "lonely"
    app.mkdir()
    (app / "recv.nqasm").write_text(bundled_program("epr_recv"))
    (app / "app.json").write_text(json.dumps({
        "app": "static",
        "roles": {"receiver": {"node": "bob", "peer": "alice", "programs": ["recv.nqasm"]}},
    }))
    assert main(["run", "--network", "nv_noiseless", "--app", str(app), "--report", str(tmp_path / "r.json")]) == 2
    assert "Deadlock" in capsys.readouterr().err


def test_run_writes_csv(tmp_path):
    csv_path = tmp_path / "shots.csv"
    args = ["run", "--network", "nv_noiseless", "--app", "bqc", "--shots", "2", "--report", str(tmp_path / "r.json"),
            "--csv", str(csv_path)]
    assert main(args) == 0
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "shot,seed,node,key,value" and len(rows) > 2


def test_isa_table(capsys):
    assert main(["isa"]) == 0
    assert "create_epr" in capsys.readouterr().out
