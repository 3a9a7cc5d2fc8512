"""``nqasm`` command-line front end."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .apps.common import DATA_DIR, load_app
from .apps.runner import APP_MODES, run_shots
from .asm import lowered_count, parse, preprocess, resolve, to_text
from .codec import decode, encode
from .compiler import MODES, NVCompiler, errors_in, gate_counts, validate
from .compiler.unit_module import UnitModule
from .config import NetworkConfig, load_config
from .errors import AsmError, Deadlock, NetQASMError
from .isa import isa_table

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_ERROR, EXIT_DEADLOCK = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("NQASM_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"nqasm: NQASM_SEED must be an integer, got {raw!r}") from None


def _network(arg: str) -> NetworkConfig:
    path = Path(arg)
    if not path.is_file():
        bundled = DATA_DIR / "configs" / f"{arg}.json"
        if bundled.is_file():
            path = bundled
    return load_config(path)


def _unit_module(arg: str) -> UnitModule:
    path = Path(arg)
    if not path.is_file():
        bundled = DATA_DIR / "configs" / f"{arg}.json"
        if bundled.is_file():
            path = bundled
    return UnitModule.load(path)


def _write(path: str | None, data: str | bytes) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    Path(path).write_bytes(data if isinstance(data, bytes) else data.encode())


def cmd_assemble(args) -> int:
    source = Path(args.input).read_text()
    meta, body = preprocess(source)
    sym = parse(body, meta)
    sub = resolve(sym)
    out = args.output or str(Path(args.input).with_suffix(".nqbin"))
    _write(out, encode(sub))
    print(f"{len(sub.instructions)} instructions, {lowered_count(sym)} lowered set insertions -> {out}")
    return EXIT_OK


def cmd_disassemble(args) -> int:
    sub = decode(Path(args.input).read_bytes())
    _write(args.output, to_text(sub))
    return EXIT_OK


def _read_subroutine(path: str):
    p = Path(path)
    if p.suffix == ".nqbin":
        return decode(p.read_bytes())
    meta, body = preprocess(p.read_text())
    return resolve(parse(body, meta))


def cmd_compile(args) -> int:
    um = _unit_module(args.unit_module)
    sub = _read_subroutine(args.input)
    if args.flavor == "nv":
        result = NVCompiler(um, args.mode).compile(sub)
        out, counts = result.subroutine, result.counts(um)
    else:
        errors = errors_in(validate(sub, um))
        if errors:
            raise NetQASMError(str(errors[0]))
        out, counts = sub, gate_counts(sub, um)
    if args.output:
        _write(args.output, encode(out) if args.output.endswith(".nqbin") else to_text(out))
    else:
        sys.stdout.write(to_text(out))
    for key, value in counts.to_dict().items():
        print(f"{key}: {value}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _network(args.network)
    if args.two_qubit_fidelity is not None:
        config = config.with_two_qubit_fidelity(args.two_qubit_fidelity)
    app = load_app(args.app)
    seed = _default_seed() if args.seed is None else args.seed
    report = run_shots(config, app, seed, args.shots, mode=args.mode, jobs=args.jobs)
    _write(args.report, json.dumps(report, sort_keys=True, indent=2) + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["shot", "seed", "node", "key", "value"])
            for rec in report["shot_results"]:
                for node, outputs in sorted(rec["outputs"].items()):
                    for key, value in sorted(outputs.items()):
                        writer.writerow([rec["shot"], rec["seed"], node, key, value])
    if args.report not in (None, "-"):
        summary = {k: v for k, v in report["metrics"].items() if k != "gate_counts"}
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_isa(args) -> int:
    sys.stdout.write(isa_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nqasm", description="NetQASM toolchain and network simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("assemble", help="text listing to binary")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("disassemble", help="binary to canonical text")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_disassemble)

    p = sub.add_parser("compile", help="validate and translate for a unit module")
    p.add_argument("input")
    p.add_argument("--flavor", choices=["nv", "vanilla"], default="nv")
    p.add_argument("--unit-module", required=True, help="unit module JSON (or a bundled name)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--optimized", dest="mode", action="store_const", const="optimized")
    group.add_argument("--adhoc-order", "--num", dest="mode", action="store_const", const="num",
                       help="optimized passes but keep the program's measurement order")
    group.add_argument("--adhoc", dest="mode", action="store_const", const="adhoc",
                       help="instruction-by-instruction mapping")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compile, mode="optimized")

    p = sub.add_parser("run", help="simulate an app for several shots")
    p.add_argument("--network", required=True, help="network config JSON (or a bundled name)")
    p.add_argument("--app", required=True, help="app directory (or a bundled name)")
    p.add_argument("--seed", type=int, help="run seed (default: $NQASM_SEED or 0)")
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--report", help="report path (default: stdout)")
    p.add_argument("--mode", help="compilation scenario: " + "; ".join(f"{k}: {'|'.join(v)}" for k, v in APP_MODES.items()))
    p.add_argument("--two-qubit-fidelity", type=float, help="override the swept two-qubit fidelity")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--csv", help="also write per-shot outputs as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("isa", help="print the opcode table")
    p.set_defaults(func=cmd_isa)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is cmd_run and args.shots < 1:
        parser.error("--shots must be at least 1")
    try:
        return args.func(args)
    except Deadlock as exc:
        print(f"nqasm: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_DEADLOCK
    except AsmError as exc:
        print(f"nqasm: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (NetQASMError, ValueError, OSError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"nqasm: {code}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
