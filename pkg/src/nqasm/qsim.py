"""Density-matrix backend with depolarizing gate noise and noisy readout.

Qubits are identified by global integer ids.  Live qubits are partitioned into
entanglement groups, each held as one :class:`DensityState`; a gate acting
across groups merges them, and measurement or freeing splits them again.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import NoSuchQubit, NotCompletelyPositive, NotUnitary, TooManyQubits
from .gates import X, Y, Z

__all__ = [
    "DensityState",
    "QuantumMemory",
    "depolarizing_probability",
    "depolarize",
    "depolarizing_choi",
    "check_channel",
    "fidelity",
    "bell_state",
    "werner_state",
]

MAX_GROUP_QUBITS = 12
_TOL = 1e-9


def depolarizing_probability(fid: float) -> float:
    """p = 4/3 (1 - F)."""
    return 4.0 / 3.0 * (1.0 - fid)


def _apply_op(rho: np.ndarray, k: int, op: np.ndarray, pos: list[int]) -> np.ndarray:
    """Return op ρ op† where op acts on the qubits at positions ``pos``."""
    m = len(pos)
    t = rho.reshape((2,) * (2 * k))
    u = op.reshape((2,) * (2 * m))
    t = np.tensordot(u, t, axes=(list(range(m, 2 * m)), pos))
    t = np.moveaxis(t, list(range(m)), pos)
    cols = [k + p for p in pos]
    t = np.tensordot(t, u.conj(), axes=(cols, list(range(m, 2 * m))))
    t = np.moveaxis(t, list(range(2 * k - m, 2 * k)), cols)
    return t.reshape(2**k, 2**k)


def _partial_trace(rho: np.ndarray, k: int, pos: int) -> np.ndarray:
    t = rho.reshape((2,) * (2 * k))
    t = np.trace(t, axis1=pos, axis2=k + pos)
    return t.reshape(2 ** (k - 1), 2 ** (k - 1))


def depolarize(rho: np.ndarray, k: int, pos: int, p: float) -> np.ndarray:
    """(1-p)ρ + p/3 (XρX + YρY + ZρZ) on the qubit at ``pos``."""
    if p == 0.0:
        return rho
    out = (1.0 - p) * rho
    for P in (X, Y, Z):
        out = out + (p / 3.0) * _apply_op(rho, k, P, [pos])
    return out


def _depolarize_joint(rho: np.ndarray, k: int, pos: list[int], p: float) -> np.ndarray:
    """15-Pauli two-qubit channel: (1-p)ρ + p/15 Σ_{P≠II} PρP."""
    if p == 0.0:
        return rho
    paulis = [np.eye(2, dtype=complex), X, Y, Z]
    out = (1.0 - p) * rho
    for a in range(4):
        for b in range(4):
            if a == b == 0:
                continue
            out = out + (p / 15.0) * _apply_op(rho, k, np.kron(paulis[a], paulis[b]), pos)
    return out


def depolarizing_choi(p: float) -> np.ndarray:
    """Choi matrix of the single-qubit depolarizing map."""
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, depolarize(e, 1, 0, p))
    return choi


@functools.lru_cache(maxsize=None)
def check_channel(p: float) -> None:
    """Raise unless the depolarizing map with parameter p is completely positive."""
    eig = np.linalg.eigvalsh(depolarizing_choi(p))
    if eig.min() < -_TOL:
        raise NotCompletelyPositive(f"depolarizing parameter p={p} gives a non-CP map")


def bell_state() -> np.ndarray:
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    return phi


def werner_state(fid: float) -> np.ndarray:
    """(1-p)|Φ+⟩⟨Φ+| + p I/4 with p = 4/3 (1-F); its Φ+ fidelity is F."""
    p = depolarizing_probability(fid)
    phi = bell_state()
    return (1 - p) * np.outer(phi, phi.conj()) + p * np.eye(4) / 4


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex).ravel()
    if rho.shape != (psi.size, psi.size):
        raise ValueError(f"dimension mismatch: {rho.shape} vs {psi.size}")
    return float(np.real(psi.conj() @ rho @ psi))


@dataclass
class DensityState:
    qubits: list[int]
    rho: np.ndarray
    clock: float = 0.0

    @property
    def k(self) -> int:
        return len(self.qubits)

    def check(self, tol: float = _TOL) -> None:
        assert abs(np.trace(self.rho) - 1) < tol, "trace drift"
        assert np.abs(self.rho - self.rho.conj().T).max() < tol, "not Hermitian"
        assert np.linalg.eigvalsh(self.rho).min() > -tol, "not PSD"


@dataclass
class QuantumMemory:
    """All live qubits of one simulation run."""

    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    max_group: int = MAX_GROUP_QUBITS
    two_qubit_channel: str = "local"  # or "joint"
    _groups: dict[int, DensityState] = field(default_factory=dict, repr=False)

    # bookkeeping -----------------------------------------------------------
    def has(self, qid: int) -> bool:
        return qid in self._groups

    def qubits(self) -> list[int]:
        return sorted(self._groups)

    def groups(self) -> list[DensityState]:
        seen, out = set(), []
        for g in self._groups.values():
            if id(g) not in seen:
                seen.add(id(g))
                out.append(g)
        return out

    def _group(self, qid: int) -> DensityState:
        try:
            return self._groups[qid]
        except KeyError:
            raise NoSuchQubit(f"qubit {qid} is not live") from None

    def _register(self, g: DensityState) -> None:
        for q in g.qubits:
            self._groups[q] = g

    def _merge(self, qids) -> DensityState:
        groups = []
        for q in qids:
            g = self._group(q)
            if all(g is not h for h in groups):
                groups.append(g)
        if len(groups) == 1:
            return groups[0]
        total = sum(g.k for g in groups)
        if total > self.max_group:
            raise TooManyQubits(f"joint state of {total} qubits exceeds cap {self.max_group}")
        rho = groups[0].rho
        qubits = list(groups[0].qubits)
        for g in groups[1:]:
            rho = np.kron(rho, g.rho)
            qubits += g.qubits
        merged = DensityState(qubits, rho, max(g.clock for g in groups))
        self._register(merged)
        return merged

    def _detach(self, qid: int) -> None:
        """Trace ``qid`` out of its group and forget it."""
        g = self._group(qid)
        del self._groups[qid]
        if g.k == 1:
            return
        pos = g.qubits.index(qid)
        rest = DensityState([q for q in g.qubits if q != qid], _partial_trace(g.rho, g.k, pos), g.clock)
        self._register(rest)

    # operations ------------------------------------------------------------
    def add_qubit(self, qid: int) -> None:
        """Bring a fresh qubit into existence in |0⟩."""
        if qid in self._groups:
            raise ValueError(f"qubit {qid} already live")
        rho = np.zeros((2, 2), dtype=complex)
        rho[0, 0] = 1.0
        self._groups[qid] = DensityState([qid], rho)

    def init_qubit(self, qid: int, fidelity: float = 1.0, duration: float = 0.0) -> None:
        clock = self._group(qid).clock
        self._detach(qid)
        self.add_qubit(qid)
        g = self._groups[qid]
        g.rho = depolarize(g.rho, 1, 0, depolarizing_probability(fidelity))
        g.clock = clock + duration

    def free_qubit(self, qid: int) -> None:
        self._detach(qid)

    def apply_gate(self, matrix: np.ndarray, qids, fidelity: float = 1.0, duration: float = 0.0) -> None:
        qids = list(qids)
        m = len(qids)
        if matrix.shape != (2**m, 2**m) or not np.allclose(
            matrix @ matrix.conj().T, np.eye(2**m), atol=_TOL
        ):
            raise NotUnitary(f"matrix is not a {m}-qubit unitary")
        g = self._merge(qids)
        pos = [g.qubits.index(q) for q in qids]
        g.rho = _apply_op(g.rho, g.k, matrix, pos)
        p = depolarizing_probability(fidelity)
        if p:
            if m == 2 and self.two_qubit_channel == "joint":
                g.rho = _depolarize_joint(g.rho, g.k, pos, p)
            else:
                for ps in pos:
                    g.rho = depolarize(g.rho, g.k, ps, p)
        g.clock += duration

    def depolarize(self, qid: int, p: float) -> None:
        g = self._group(qid)
        g.rho = depolarize(g.rho, g.k, g.qubits.index(qid), p)

    def measure(
        self,
        qid: int,
        prob_error_0: float = 0.0,
        prob_error_1: float = 0.0,
        duration: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> int:
        """Z-measure; the qubit stays live in the collapsed state.  Returns the reported bit.

        ``rng`` overrides the memory's generator for this measurement only."""
        rng = rng or self.rng
        g = self._group(qid)
        k, pos = g.k, g.qubits.index(qid)
        t = g.rho.reshape((2,) * (2 * k))
        diag = np.real(np.einsum("ii->i", g.rho)).reshape((2,) * k)
        p1 = float(np.clip(np.take(diag, 1, axis=pos).sum(), 0.0, 1.0))
        outcome = int(rng.random() < p1)
        prob = p1 if outcome else 1.0 - p1
        # project onto |outcome⟩ and renormalise, then split the qubit off
        idx = [slice(None)] * (2 * k)
        idx[pos] = outcome
        idx[k + pos] = outcome
        rest = t[tuple(idx)].reshape(2 ** (k - 1), 2 ** (k - 1)) / prob if k > 1 else None
        clock = g.clock + duration
        for q in g.qubits:
            del self._groups[q]
        if rest is not None:
            self._register(DensityState([q for q in g.qubits if q != qid], rest, g.clock))
        collapsed = np.zeros((2, 2), dtype=complex)
        collapsed[outcome, outcome] = 1.0
        self._groups[qid] = DensityState([qid], collapsed, clock)
        flip = prob_error_1 if outcome else prob_error_0
        if flip and rng.random() < flip:
            return 1 - outcome
        return outcome

    def make_epr_pair(self, qa: int, qb: int, link_fidelity: float = 1.0, duration: float = 0.0) -> tuple[int, int]:
        for q in (qa, qb):
            if q in self._groups:
                self._detach(q)
        g = DensityState([qa, qb], werner_state(link_fidelity).astype(complex), duration)
        self._register(g)
        return qa, qb

    def reduced_state(self, qids) -> np.ndarray:
        """Reduced density matrix of ``qids`` in the given order."""
        qids = list(qids)
        groups = []
        for q in qids:
            g = self._group(q)
            if all(g is not h for h in groups):
                groups.append(g)
        rho, order = np.ones((1, 1), dtype=complex), []
        for g in groups:
            r, qs = g.rho, list(g.qubits)
            for q in list(qs):
                if q not in qids:
                    r = _partial_trace(r, len(qs), qs.index(q))
                    qs.remove(q)
            rho = np.kron(rho, r)
            order += qs
        k = len(order)
        perm = [order.index(q) for q in qids]
        t = rho.reshape((2,) * (2 * k)).transpose(perm + [k + p for p in perm])
        return t.reshape(2**k, 2**k)

    def fidelity(self, qids, psi) -> float:
        return fidelity(self.reduced_state(qids), psi)
