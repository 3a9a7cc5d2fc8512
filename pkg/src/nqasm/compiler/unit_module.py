"""Unit modules: the per-application view of a node's quantum memory."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

__all__ = ["QubitType", "GateSpec", "UMQubit", "UMEdge", "UnitModule", "VANILLA_1Q", "NV_COMM_GATES", "NV_STORAGE_GATES"]

VANILLA_1Q = ("x", "y", "z", "h", "s", "k", "t", "rot_x", "rot_y", "rot_z")
NV_COMM_GATES = ("init", "rot_x", "rot_y", "rot_z", "meas")
NV_STORAGE_GATES = ("init", "rot_x", "rot_y", "rot_z")


class QubitType(enum.Enum):
    COMMUNICATION = "communication"
    STORAGE = "storage"


@dataclass(frozen=True)
class GateSpec:
    duration: float
    fidelity: float = 1.0


@dataclass
class UMQubit:
    id: int
    type: QubitType
    gates: dict[str, GateSpec] = field(default_factory=dict)


@dataclass
class UMEdge:
    qubits: tuple[int, int]
    gates: dict[str, GateSpec] = field(default_factory=dict)


@dataclass
class UnitModule:
    qubits: list[UMQubit]
    edges: list[UMEdge] = field(default_factory=list)
    profile: str = "generic"  # "generic" (vanilla native) or "nv"
    prob_error_meas_0: float = 0.0
    prob_error_meas_1: float = 0.0

    def __post_init__(self):
        ids = [q.id for q in self.qubits]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate virtual qubit ids in unit module")
        self._by_id = {q.id: q for q in self.qubits}
        self._edges = {}
        for e in self.edges:
            a, b = e.qubits
            if a not in self._by_id or b not in self._by_id:
                raise ConfigError(f"edge {e.qubits} references unknown qubits")
            self._edges[frozenset((a, b))] = e
        if self.profile == "nv":
            comm = self.comm_qubits
            if len(comm) != 1:
                raise ConfigError("NV unit module needs exactly one communication qubit")
            for e in self.edges:
                if comm[0] not in e.qubits:
                    raise ConfigError(f"NV edge {e.qubits} does not touch the communication qubit")

    @property
    def is_nv(self) -> bool:
        return self.profile == "nv"

    @property
    def ids(self) -> list[int]:
        return [q.id for q in self.qubits]

    @property
    def comm_qubits(self) -> list[int]:
        return [q.id for q in self.qubits if q.type is QubitType.COMMUNICATION]

    @property
    def comm(self) -> int:
        return self.comm_qubits[0]

    @property
    def storage_qubits(self) -> list[int]:
        return [q.id for q in self.qubits if q.type is QubitType.STORAGE]

    def qubit(self, qid: int) -> UMQubit | None:
        return self._by_id.get(qid)

    def edge(self, a: int, b: int) -> UMEdge | None:
        return self._edges.get(frozenset((a, b)))

    def gate_spec(self, mnemonic: str, qids) -> GateSpec | None:
        qids = tuple(qids)
        if len(qids) == 1:
            q = self.qubit(qids[0])
            return q.gates.get(mnemonic) if q else None
        e = self.edge(*qids)
        return e.gates.get(mnemonic) if e else None

    # serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        def gates(table):
            return {k: {"duration": v.duration, "fidelity": v.fidelity} for k, v in sorted(table.items())}

        return {
            "profile": self.profile,
            "prob_error_meas_0": self.prob_error_meas_0,
            "prob_error_meas_1": self.prob_error_meas_1,
            "qubits": [{"id": q.id, "type": q.type.value, "gates": gates(q.gates)} for q in self.qubits],
            "edges": [{"qubits": list(e.qubits), "gates": gates(e.gates)} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> UnitModule:
        def gates(table):
            return {k: GateSpec(float(v["duration"]), float(v.get("fidelity", 1.0))) for k, v in table.items()}

        try:
            return cls(
                qubits=[UMQubit(int(q["id"]), QubitType(q["type"]), gates(q.get("gates", {}))) for q in data["qubits"]],
                edges=[UMEdge(tuple(e["qubits"]), gates(e.get("gates", {}))) for e in data.get("edges", [])],
                profile=data.get("profile", "generic"),
                prob_error_meas_0=float(data.get("prob_error_meas_0", 0.0)),
                prob_error_meas_1=float(data.get("prob_error_meas_1", 0.0)),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"malformed unit module: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> UnitModule:
        return cls.from_dict(json.loads(Path(path).read_text()))
