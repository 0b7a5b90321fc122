"""Dense statevector oracle with exhaustive mid-circuit measurement branching.

Bit ordering is little-endian: in a :class:`StateVector` whose ``qubits`` is
``(q_a, q_b, ...)``, qubit ``q_a`` is the least significant bit of the
amplitude index. Circuits are always reported with qubits sorted by id, so
qubit 0 is the least significant bit.

Internally all live branches are kept in one tensor of shape
``(branches, 2, 2, ..., 2)`` and every gate is applied to the whole batch.
Qubits join the tensor lazily in ``|0>`` on first use and leave it when
measured.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .ir import (
    Barrier,
    BellPrep,
    Circuit,
    Conditioned,
    Controlled,
    FanOut,
    GhzPrep,
    Local1Q,
    Measure,
    Role,
)

NORM_TOL = 1e-9
PRUNE_TOL = 1e-12
DEFAULT_BRANCH_CAP = 2**20
DEFAULT_UNITARY_QUBIT_CAP = 12
DEFAULT_PAULI_CAP = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


class SimulationError(RuntimeError):
    pass


class BranchLimitExceeded(SimulationError):
    pass


class QubitLimitExceeded(SimulationError):
    pass


@dataclass
class StateVector:
    amps: np.ndarray
    qubits: tuple[int, ...]

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        self.qubits = tuple(self.qubits)
        if self.amps.size != 2 ** len(self.qubits):
            raise ValueError(
                f"{self.amps.size} amplitudes do not match {len(self.qubits)} qubits"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in ordering {self.qubits}")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @classmethod
    def basis(cls, qubits: Sequence[int], index: int = 0) -> StateVector:
        amps = np.zeros(2 ** len(qubits), dtype=complex)
        amps[index] = 1
        return cls(amps, tuple(qubits))

    @classmethod
    def random(cls, qubits: Sequence[int], rng: np.random.Generator) -> StateVector:
        """Haar-random pure state (normalized complex Gaussian vector)."""
        dim = 2 ** len(qubits)
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return cls(v / np.linalg.norm(v), tuple(qubits))

    def reordered(self, qubits: Sequence[int]) -> StateVector:
        """Same state expressed with a different qubit-to-bit assignment."""
        qubits = tuple(qubits)
        if sorted(qubits) != sorted(self.qubits):
            raise ValueError(f"cannot reorder {self.qubits} as {qubits}")
        n = self.num_qubits
        # tensor axis k holds qubit self.qubits[n-1-k]
        t = self.amps.reshape((2,) * n)
        axis_of = {q: n - 1 - k for k, q in enumerate(self.qubits)}
        t = t.transpose([axis_of[q] for q in reversed(qubits)])
        return StateVector(t.reshape(-1), qubits)

    def to_csv(self) -> str:
        """Amplitude dump (index, re, im) for debugging failed comparisons."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, a in enumerate(self.amps):
            w.writerow([i, repr(float(a.real)), repr(float(a.imag))])
        return buf.getvalue()


@dataclass
class Branch:
    outcomes: dict[int, int]
    probability: float
    state: StateVector


def _apply(t: np.ndarray, u: np.ndarray, ax: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(u, t, axes=([1], [ax])), 0, ax)


class _Engine:
    """Batched executor. ``t`` has a leading branch axis, then one axis per live qubit."""

    def __init__(self, t: np.ndarray, live: list[int], probs: np.ndarray):
        self.t = t
        self.live = live
        self.probs = probs
        self.outcomes: dict[int, np.ndarray] = {}
        self.measured: set[int] = set()

    @property
    def batch(self) -> int:
        return self.t.shape[0]

    def axis(self, q: int) -> int:
        if q in self.measured:
            raise SimulationError(f"qubit {q} used after being measured")
        if q not in self.live:
            self.t = np.stack([self.t, np.zeros_like(self.t)], axis=-1)
            self.live.append(q)
        return 1 + self.live.index(q)

    def apply_1q(self, u: np.ndarray, q: int) -> None:
        ax = self.axis(q)
        self.t = _apply(self.t, u, ax)

    def apply_controlled(self, u: np.ndarray, control: int, target: int) -> None:
        cax, tax = self.axis(control), self.axis(target)
        idx = [slice(None)] * self.t.ndim
        idx[cax] = 1
        idx = tuple(idx)
        self.t[idx] = _apply(self.t[idx], u, tax - 1 if tax > cax else tax)

    def apply_conditioned(self, u: np.ndarray, q: int, bits: Sequence[int]) -> None:
        ax = self.axis(q)
        mask = np.zeros(self.batch, dtype=bool)
        for b in bits:
            mask ^= self.outcomes[b].astype(bool)
        if mask.any():
            self.t[mask] = _apply(self.t[mask], u, ax)

    def prepare(self, members: Sequence[int]) -> None:
        for q in members:
            if q in self.live:
                ax = self.axis(q)
                excited = np.sum(np.abs(self.t.take(1, axis=ax)) ** 2)
                if excited > NORM_TOL:
                    raise SimulationError(f"resource qubit {q} is not in |0> when prepared")
        for q in members:
            self.axis(q)
        self.apply_1q(_H, members[0])
        for q in members[1:]:
            self.apply_controlled(_X, members[0], q)

    def measure(self, q: int, out: int) -> None:
        ax = self.axis(q)
        sum_axes = tuple(range(1, self.t.ndim - 1))
        parts, probs, bits, keep_idx = [], [], [], []
        for outcome in (0, 1):
            sub = self.t.take(outcome, axis=ax)
            p = np.sum(np.abs(sub) ** 2, axis=sum_axes) if sum_axes else np.abs(sub) ** 2
            total = self.probs * p
            keep = total >= PRUNE_TOL
            sel = np.nonzero(keep)[0]
            scale = 1 / np.sqrt(p[sel])
            parts.append(sub[sel] * scale.reshape((-1,) + (1,) * (sub.ndim - 1)))
            probs.append(total[sel])
            bits.append(np.full(sel.size, outcome, dtype=np.int8))
            keep_idx.append(sel)
        self.t = np.concatenate(parts, axis=0)
        self.probs = np.concatenate(probs)
        self.outcomes = {b: np.concatenate([v[s] for s in keep_idx]) for b, v in self.outcomes.items()}
        self.outcomes[out] = np.concatenate(bits)
        self.live.remove(q)
        self.measured.add(q)

    def run(self, gates) -> None:
        for g in gates:
            if isinstance(g, Local1Q):
                self.apply_1q(g.u.matrix(), g.q)
            elif isinstance(g, Controlled):
                self.apply_controlled(g.u.matrix(), g.control, g.target)
            elif isinstance(g, FanOut):
                for q, u in g.targets:
                    self.apply_controlled(u.matrix(), g.control, q)
            elif isinstance(g, BellPrep):
                self.prepare((g.a, g.b))
            elif isinstance(g, GhzPrep):
                self.prepare(g.members)
            elif isinstance(g, Measure):
                self.measure(g.q, g.out)
            elif isinstance(g, Conditioned):
                self.apply_conditioned(g.u.matrix(), g.q, g.cond.bits)
            elif isinstance(g, Barrier):
                pass
            else:
                raise SimulationError(f"cannot simulate {type(g).__name__}")

    def amplitudes(self, qubits: Sequence[int]) -> np.ndarray:
        """Batch of little-endian amplitude vectors over ``qubits`` (all live)."""
        order = [0] + [1 + self.live.index(q) for q in reversed(qubits)]
        return self.t.transpose(order).reshape(self.batch, -1)


def _initial_engine(c: Circuit, state: StateVector | None) -> _Engine:
    if state is None:
        return _Engine(np.ones((1,), dtype=complex), [], np.ones(1))
    if abs(state.norm() - 1) > NORM_TOL:
        raise SimulationError(f"input state is not normalized (norm {state.norm():.12g})")
    circuit_qubits = set(c.qubit_ids)
    unknown = set(state.qubits) - circuit_qubits
    if unknown:
        raise SimulationError(f"input state covers qubits {sorted(unknown)} not in the circuit")
    missing = set(c.qubits_with_role(Role.COMPUTATION)) - set(state.qubits)
    if missing:
        raise SimulationError(f"input state does not cover computation qubits {sorted(missing)}")
    n = state.num_qubits
    t = state.amps.reshape((1,) + (2,) * n).copy()
    return _Engine(t, list(reversed(state.qubits)), np.ones(1))


def run_branches(
    c: Circuit,
    state: StateVector | None = None,
    *,
    max_branches: int = DEFAULT_BRANCH_CAP,
) -> list[Branch]:
    """Execute ``c`` on ``state`` and return every non-negligible measurement branch.

    ``state`` covers at least the computation qubits; any other circuit qubit
    starts in ``|0>``. ``None`` means all qubits start in ``|0>``. Each branch
    carries the normalized post-measurement state over the unmeasured qubits,
    sorted by qubit id.
    """
    num_measures = sum(isinstance(g, Measure) for g in c.gates)
    if 2**num_measures > max_branches:
        raise BranchLimitExceeded(
            f"{num_measures} measurements give up to 2^{num_measures} branches (cap {max_branches})"
        )
    eng = _initial_engine(c, state)
    eng.run(c.gates)
    survivors = sorted(q for q in c.qubit_ids if q not in eng.measured)
    for q in survivors:
        eng.axis(q)
    amps = eng.amplitudes(survivors)
    bit_ids = sorted(eng.outcomes)
    keys = [tuple(int(eng.outcomes[b][i]) for b in bit_ids) for i in range(eng.batch)]
    order = sorted(range(eng.batch), key=lambda i: keys[i])
    return [
        Branch(
            dict(zip(bit_ids, keys[i])),
            float(eng.probs[i]),
            StateVector(amps[i], tuple(survivors)),
        )
        for i in order
    ]


_NON_UNITARY_GATES = (Measure, Conditioned, BellPrep, GhzPrep)


def unitary_of(c: Circuit, *, max_qubits: int = DEFAULT_UNITARY_QUBIT_CAP) -> np.ndarray:
    """Full matrix of a measurement-free circuit (qubits ordered by id, little-endian)."""
    bad = [type(g).__name__ for g in c.gates if isinstance(g, _NON_UNITARY_GATES)]
    if bad:
        raise ValueError(f"circuit is not unitary: contains {sorted(set(bad))}")
    n = c.num_qubits
    if n > max_qubits:
        raise QubitLimitExceeded(f"{n} qubits exceeds the unitary cap of {max_qubits}")
    qubits = sorted(c.qubit_ids)
    dim = 2**n
    # batch row j is basis state j; reversed qubit list matches C-order reshape
    t = np.eye(dim, dtype=complex).reshape((dim,) + (2,) * n)
    eng = _Engine(t, list(reversed(qubits)), np.ones(dim))
    eng.run(c.gates)
    u = eng.amplitudes(qubits).T
    if np.max(np.abs(u.conj().T @ u - np.eye(dim))) > NORM_TOL:
        raise SimulationError("circuit matrix is not unitary")
    return u


def _as_vector(s) -> np.ndarray:
    return s.amps if isinstance(s, StateVector) else np.asarray(s, dtype=complex).reshape(-1)


def fidelity(a, b) -> float:
    """|<a|b>|^2 for two pure states (StateVector or raw amplitude arrays)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector) and a.qubits != b.qubits:
        b = b.reordered(a.qubits)
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    return float(abs(np.vdot(va, vb)) ** 2)


def states_equal_upto_phase(a, b, tol: float = 1e-9) -> bool:
    return fidelity(a, b) >= 1 - tol


def subsystem_fidelity(state: StateVector, target: StateVector) -> float:
    """<target| Tr_rest |state><state| |target>, where rest = state's extra qubits."""
    extra = [q for q in state.qubits if q not in target.qubits]
    if not extra:
        return fidelity(target, state)
    s = state.reordered(tuple(target.qubits) + tuple(extra))
    # low bits hold target qubits: rows index the rest, columns the target
    m = s.amps.reshape(2 ** len(extra), 2 ** target.num_qubits)
    return float(np.sum(np.abs(m @ target.amps.conj()) ** 2))


def matrices_equal_upto_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff ``max|a - e^{i phi} b| <= tol`` for the phase aligning the largest entry of ``b``."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) == 0:
        return bool(np.max(np.abs(a)) <= tol)
    ratio = a[k] / b[k]
    phase = ratio / abs(ratio) if abs(ratio) > 0 else 1.0
    return bool(np.max(np.abs(a - phase * b)) <= tol)


_PAULIS: Mapping[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": _X,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def pauli_matrix(pauli: str, *, max_len: int = DEFAULT_PAULI_CAP) -> np.ndarray:
    """Tensor product of a Pauli string; character ``i`` acts on qubit ``i``."""
    if not pauli:
        raise ValueError("empty Pauli string")
    if len(pauli) > max_len:
        raise QubitLimitExceeded(f"Pauli string of length {len(pauli)} exceeds cap {max_len}")
    bad = set(pauli) - set(_PAULIS)
    if bad:
        raise ValueError(f"invalid Pauli characters {sorted(bad)} in {pauli!r}")
    m = np.ones((1, 1), dtype=complex)
    for ch in reversed(pauli):
        m = np.kron(m, _PAULIS[ch])
    return m


def pauli_exp_matrix(pauli: str, theta: float, *, max_len: int = DEFAULT_PAULI_CAP) -> np.ndarray:
    """exp(-i theta P), using P^2 = I."""
    p = pauli_matrix(pauli, max_len=max_len)
    return np.cos(theta) * np.eye(p.shape[0]) - 1j * np.sin(theta) * p


def peak_live_qubits(c: Circuit, initial: Sequence[int] = ()) -> int:
    """Largest number of qubits the engine holds at once when running ``c``.

    Qubits in ``initial`` are live from the start; others join on first use
    and every measured qubit leaves.
    """
    live = set(initial)
    peak = len(live)
    for g in c.gates:
        live.update(g.qubits)
        peak = max(peak, len(live))
        if isinstance(g, Measure):
            live.discard(g.q)
    unmeasured = set(c.qubit_ids) - {g.q for g in c.gates if isinstance(g, Measure)}
    return max(peak, len(live | unmeasured))
