"""Network configuration: nodes, their gate tables, and links.

Gate-table and noise keys use the NV parameter names (``electron_init``,
``carbon_xy_rot``, ``ec_controlled_dir_xy``, ``prob_error_meas_0`` ...), so
a config file can be checked against the published tables line by line.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .compiler.unit_module import GateSpec, QubitType, UMEdge, UMQubit, UnitModule
from .errors import ConfigError
from .qsim import check_channel, depolarizing_probability

__all__ = [
    "NodeConfig",
    "LinkConfig",
    "NetworkConfig",
    "NV_GATE_TABLE",
    "NV_NOISE",
    "nv_node",
    "generic_node",
    "two_node_network",
    "load_config",
]

log = logging.getLogger(__name__)

# Durations in ns.  carbon_xy_rot and ec_controlled_dir_xy default to the
# 0.5 ms used for the native two-qubit gate; their fidelity is the swept value.
NV_TWO_QUBIT_DURATION = 5e5
NV_GATE_TABLE = {
    "electron_init": {"duration": 2e3, "fidelity": 0.99},
    "electron_rot": {"duration": 5.0, "fidelity": 1.0},
    "measure": {"duration": 3.7e3, "fidelity": 1.0},
    "carbon_init": {"duration": 3.1e5, "fidelity": 0.997},
    "carbon_xy_rot": {"duration": NV_TWO_QUBIT_DURATION, "fidelity": 1.0},
    "carbon_z_rot": {"duration": 5.0, "fidelity": 0.999},
    "ec_controlled_dir_xy": {"duration": NV_TWO_QUBIT_DURATION, "fidelity": 1.0},
}
NV_NOISE = {
    "prob_error_meas_0": 0.05,
    "prob_error_meas_1": 0.005,
    "link_fidelity": 0.9,
    "electron_T1": 0.0,
    "electron_T2": 0.0,
    "carbon_T1": 0.0,
    "carbon_T2": 0.0,
}
GENERIC_GATE_TABLE = {
    "init": {"duration": 1e3, "fidelity": 1.0},
    "single_qubit_gate": {"duration": 10.0, "fidelity": 1.0},
    "two_qubit_gate": {"duration": 1e3, "fidelity": 1.0},
    "measure": {"duration": 1e3, "fidelity": 1.0},
}

_NV_COMM = {"init": "electron_init", "rot_x": "electron_rot", "rot_y": "electron_rot", "rot_z": "electron_rot", "meas": "measure"}
_NV_STORAGE = {"init": "carbon_init", "rot_x": "carbon_xy_rot", "rot_y": "carbon_xy_rot", "rot_z": "carbon_z_rot"}
_NV_EDGE = {"cx_dir": "ec_controlled_dir_xy", "cy_dir": "ec_controlled_dir_xy"}
_GENERIC_1Q = ("x", "y", "z", "h", "s", "k", "t", "rot_x", "rot_y", "rot_z")


@dataclass
class NodeConfig:
    name: str
    id: int
    qubit_types: list[QubitType]
    gates: dict[str, dict]
    noise: dict[str, float] = field(default_factory=dict)
    profile: str = "nv"

    def gate(self, key: str) -> GateSpec:
        try:
            entry = self.gates[key]
        except KeyError:
            raise ConfigError(f"node {self.name}: gate table has no entry {key!r}") from None
        return GateSpec(float(entry["duration"]), float(entry.get("fidelity", 1.0)))

    @property
    def capacity(self) -> int:
        return len(self.qubit_types)

    def unit_module(self, physical: list[int] | None = None) -> UnitModule:
        """Unit module over ``physical`` qubits, renumbered 0..k-1 in the given order."""
        physical = list(range(self.capacity)) if physical is None else list(physical)
        qubits, edges = [], []
        for vid, pid in enumerate(physical):
            qtype = self.qubit_types[pid]
            if self.profile == "nv":
                table = _NV_COMM if qtype is QubitType.COMMUNICATION else _NV_STORAGE
                gates = {g: self.gate(k) for g, k in table.items()}
            else:
                gates = {g: self.gate("single_qubit_gate") for g in _GENERIC_1Q}
                gates["init"] = self.gate("init")
                gates["meas"] = self.gate("measure")
            qubits.append(UMQubit(vid, qtype, gates))
        if self.profile == "nv":
            comm = [q.id for q in qubits if q.type is QubitType.COMMUNICATION]
            for c in comm:
                for q in qubits:
                    if q.type is QubitType.STORAGE:
                        edges.append(UMEdge((c, q.id), {g: self.gate(k) for g, k in _NV_EDGE.items()}))
        else:
            two = self.gate("two_qubit_gate")
            for a in range(len(qubits)):
                for b in range(a + 1, len(qubits)):
                    edges.append(UMEdge((a, b), {"cnot": two, "cphase": two}))
        return UnitModule(
            qubits,
            edges,
            profile=self.profile,
            prob_error_meas_0=float(self.noise.get("prob_error_meas_0", 0.0)),
            prob_error_meas_1=float(self.noise.get("prob_error_meas_1", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "id": self.id,
            "profile": self.profile,
            "qubits": [{"id": i, "type": t.value} for i, t in enumerate(self.qubit_types)],
            "gates": {k: dict(v) for k, v in sorted(self.gates.items())},
            "noise": dict(sorted(self.noise.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> NodeConfig:
        try:
            qubits = sorted(data["qubits"], key=lambda q: q["id"])
            if [q["id"] for q in qubits] != list(range(len(qubits))):
                raise ConfigError(f"node {data['name']}: qubit ids must be 0..n-1")
            return cls(
                name=data["name"],
                id=int(data["id"]),
                qubit_types=[QubitType(q["type"]) for q in qubits],
                gates={k: dict(v) for k, v in data.get("gates", {}).items()},
                noise={k: float(v) for k, v in data.get("noise", {}).items()},
                profile=data.get("profile", "nv"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"malformed node entry: {exc}") from None


@dataclass
class LinkConfig:
    nodes: tuple[str, str]
    link_fidelity: float = 1.0
    cycle_time: float = 1e4

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "link_fidelity": self.link_fidelity, "cycle_time": self.cycle_time}


@dataclass
class NetworkConfig:
    nodes: list[NodeConfig]
    links: list[LinkConfig] = field(default_factory=list)
    seed: int = 0
    classical_latency: float = 0.0
    two_qubit_channel: str = "local"

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        names = [n.name for n in self.nodes]
        if len(set(ids)) != len(ids) or len(set(names)) != len(names):
            raise ConfigError("node ids and names must be unique")
        for link in self.links:
            for name in link.nodes:
                if name not in names:
                    raise ConfigError(f"link references unknown node {name!r}")
        self.validate_noise()

    def validate_noise(self) -> None:
        for node in self.nodes:
            for key, entry in node.gates.items():
                fid = float(entry.get("fidelity", 1.0))
                if not 0.0 <= fid <= 1.0:
                    raise ConfigError(f"{node.name}.{key}: fidelity {fid} outside [0, 1]")
                check_channel(depolarizing_probability(fid))
            for key in ("prob_error_meas_0", "prob_error_meas_1"):
                p = node.noise.get(key, 0.0)
                if not 0.0 <= p <= 1.0:
                    raise ConfigError(f"{node.name}.{key}: {p} is not a probability")
            for key in ("electron_T1", "electron_T2", "carbon_T1", "carbon_T2"):
                if node.noise.get(key, 0.0):
                    log.warning("%s: %s is recorded but time-dependent decoherence is not simulated", node.name, key)
        for link in self.links:
            if not 0.25 <= link.link_fidelity <= 1.0:
                raise ConfigError(f"link {link.nodes}: link_fidelity {link.link_fidelity} outside [0.25, 1]")

    def node(self, name: str) -> NodeConfig:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ConfigError(f"no node named {name!r}")

    def node_by_id(self, node_id: int) -> NodeConfig:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise ConfigError(f"no node with id {node_id}")

    def link(self, a: str, b: str) -> LinkConfig:
        for link in self.links:
            if set(link.nodes) == {a, b}:
                return link
        raise ConfigError(f"no link between {a} and {b}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "classical_latency": self.classical_latency,
            "two_qubit_channel": self.two_qubit_channel,
            "nodes": [n.to_dict() for n in self.nodes],
            "links": [link.to_dict() for link in self.links],
        }

    @classmethod
    def from_dict(cls, data: dict) -> NetworkConfig:
        try:
            links = [
                LinkConfig(tuple(x["nodes"]), float(x.get("link_fidelity", 1.0)), float(x.get("cycle_time", 1e4)))
                for x in data.get("links", [])
            ]
            return cls(
                nodes=[NodeConfig.from_dict(n) for n in data["nodes"]],
                links=links,
                seed=int(data.get("seed", 0)),
                classical_latency=float(data.get("classical_latency", 0.0)),
                two_qubit_channel=data.get("two_qubit_channel", "local"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed network config: {exc}") from None

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_two_qubit_fidelity(self, fid: float) -> NetworkConfig:
        """Copy with ec_controlled_dir_xy and carbon_xy_rot fidelity set to ``fid`` on NV nodes."""
        nodes = []
        for n in self.nodes:
            gates = {k: dict(v) for k, v in n.gates.items()}
            if n.profile == "nv":
                for key in ("ec_controlled_dir_xy", "carbon_xy_rot"):
                    gates[key]["fidelity"] = fid
            nodes.append(replace(n, gates=gates))
        return replace(self, nodes=nodes)


def load_config(path: str | Path) -> NetworkConfig:
    return NetworkConfig.from_dict(json.loads(Path(path).read_text()))


def nv_node(
    name: str,
    node_id: int,
    num_qubits: int = 3,
    two_qubit_fidelity: float = 1.0,
    two_qubit_duration: float = NV_TWO_QUBIT_DURATION,
    noiseless: bool = False,
) -> NodeConfig:
    """An NV node with one electron (communication) and ``num_qubits - 1`` carbons."""
    gates = {k: dict(v) for k, v in NV_GATE_TABLE.items()}
    for key in ("carbon_xy_rot", "ec_controlled_dir_xy"):
        gates[key] = {"duration": two_qubit_duration, "fidelity": two_qubit_fidelity}
    noise = {k: v for k, v in NV_NOISE.items() if k != "link_fidelity"}
    if noiseless:
        for v in gates.values():
            v["fidelity"] = 1.0
        noise["prob_error_meas_0"] = noise["prob_error_meas_1"] = 0.0
    types = [QubitType.COMMUNICATION] + [QubitType.STORAGE] * (num_qubits - 1)
    return NodeConfig(name, node_id, types, gates, noise, profile="nv")


def generic_node(name: str, node_id: int, num_qubits: int = 3, **noise) -> NodeConfig:
    """A vanilla-native node where every qubit can do everything."""
    gates = {k: dict(v) for k, v in GENERIC_GATE_TABLE.items()}
    return NodeConfig(name, node_id, [QubitType.COMMUNICATION] * num_qubits, gates, dict(noise), profile="generic")


def two_node_network(
    a: str = "alice",
    b: str = "bob",
    profile: str = "nv",
    num_qubits: int = 3,
    two_qubit_fidelity: float = 1.0,
    noiseless: bool = False,
    link_fidelity: float | None = None,
    cycle_time: float = 1e4,
) -> NetworkConfig:
    if profile == "nv":
        nodes = [
            nv_node(a, 0, num_qubits, two_qubit_fidelity, noiseless=noiseless),
            nv_node(b, 1, num_qubits, two_qubit_fidelity, noiseless=noiseless),
        ]
    else:
        nodes = [generic_node(a, 0, num_qubits), generic_node(b, 1, num_qubits)]
    if link_fidelity is None:
        link_fidelity = 1.0 if noiseless or profile != "nv" else NV_NOISE["link_fidelity"]
    return NetworkConfig(nodes, [LinkConfig((a, b), link_fidelity, cycle_time)])
