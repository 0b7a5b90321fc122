"""Circuit intermediate representation for distributed circuits.

A :class:`Circuit` is an ordered list of gates over integer-addressed qubits
and classical bits, plus a :class:`Partition` that places every qubit on a
node. Gates reference qubits and classical bits by id.

Conventions used everywhere in this package:

* ``Rz(l) = diag(exp(-i l/2), exp(i l/2))`` (half-angle form).
* ``P(a) = diag(1, exp(i a))``.
* CNOT is ``Controlled(X, control, target)``.
"""

from __future__ import annotations

import cmath
import enum
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Union

import numpy as np

UNITARY_TOL = 1e-10


class Role(str, enum.Enum):
    COMPUTATION = "computation"
    COMMUNICATION = "communication"
    ANCILLA = "ancilla"


class GhzMode(str, enum.Enum):
    ONESHOT = "oneshot"
    TREE = "tree"


@dataclass(frozen=True)
class QubitRef:
    id: int
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label if self.label is not None else f"q{self.id}"


@dataclass(frozen=True)
class NodeId:
    id: int
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label if self.label is not None else f"N{self.id}"


@dataclass(frozen=True)
class ClassicalBit:
    id: int
    label: str | None = None


@dataclass(frozen=True)
class ParityCondition:
    """Holds iff the XOR of the referenced classical bits is 1."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(self.bits))

    def evaluate(self, outcomes: Mapping[int, int]) -> bool:
        return sum(outcomes[b] for b in self.bits) % 2 == 1


# ---------------------------------------------------------------------------
# Single-qubit unitaries
# ---------------------------------------------------------------------------

_FIXED_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "T": np.diag([1, cmath.exp(1j * math.pi / 4)]),
}
_ANGLE_KINDS = ("Rz", "Rx", "P")
UNITARY_KINDS = tuple(_FIXED_MATRICES) + _ANGLE_KINDS + ("Custom",)


@dataclass(frozen=True)
class OneQubitUnitary:
    """A named single-qubit gate; ``theta`` for rotations, ``entries`` for Custom."""

    kind: str
    theta: float | None = None
    entries: tuple[tuple[complex, complex], tuple[complex, complex]] | None = None

    def matrix(self) -> np.ndarray:
        if self.kind in _FIXED_MATRICES:
            return _FIXED_MATRICES[self.kind].copy()
        if self.kind == "Rz":
            return np.diag([cmath.exp(-0.5j * self.theta), cmath.exp(0.5j * self.theta)])
        if self.kind == "Rx":
            c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        if self.kind == "P":
            return np.diag([1, cmath.exp(1j * self.theta)])
        if self.kind == "Custom":
            return np.array(self.entries, dtype=complex)
        raise ValueError(f"unknown unitary kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind in _ANGLE_KINDS:
            return f"{self.kind}({self.theta:.6g})"
        return self.kind


H = OneQubitUnitary("H")
X = OneQubitUnitary("X")
Y = OneQubitUnitary("Y")
Z = OneQubitUnitary("Z")
S = OneQubitUnitary("S")
Sdg = OneQubitUnitary("Sdg")
T = OneQubitUnitary("T")


def Rz(theta: float) -> OneQubitUnitary:
    return OneQubitUnitary("Rz", float(theta))


def Rx(theta: float) -> OneQubitUnitary:
    return OneQubitUnitary("Rx", float(theta))


def P(theta: float) -> OneQubitUnitary:
    return OneQubitUnitary("P", float(theta))


def Custom(matrix) -> OneQubitUnitary:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"custom unitary must be 2x2, got {m.shape}")
    entries = tuple(tuple(complex(v) for v in row) for row in m)
    return OneQubitUnitary("Custom", entries=entries)


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Local1Q:
    u: OneQubitUnitary
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class Controlled:
    u: OneQubitUnitary
    control: int
    target: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class FanOut:
    """One control driving a (possibly different) unitary on each target."""

    control: int
    targets: tuple[tuple[int, OneQubitUnitary], ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple((int(q), u) for q, u in self.targets))

    @property
    def target_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.targets)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control,) + self.target_qubits


@dataclass(frozen=True)
class BellPrep:
    a: int
    b: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.a, self.b)


@dataclass(frozen=True)
class GhzPrep:
    members: tuple[int, ...]
    mode: GhzMode = GhzMode.ONESHOT

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "mode", GhzMode(self.mode))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.members


@dataclass(frozen=True)
class Measure:
    q: int
    out: int
    basis: str = "Z"

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class Conditioned:
    cond: ParityCondition
    u: OneQubitUnitary
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)


@dataclass(frozen=True)
class Barrier:
    note: str = ""

    @property
    def qubits(self) -> tuple[int, ...]:
        return ()


Gate = Union[Local1Q, Controlled, FanOut, BellPrep, GhzPrep, Measure, Conditioned, Barrier]
GATE_TYPES = (Local1Q, Controlled, FanOut, BellPrep, GhzPrep, Measure, Conditioned, Barrier)


def gate_unitaries(g: Gate) -> list[OneQubitUnitary]:
    if isinstance(g, (Local1Q, Controlled, Conditioned)):
        return [g.u]
    if isinstance(g, FanOut):
        return [u for _, u in g.targets]
    return []


# ---------------------------------------------------------------------------
# Partition and circuit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Placement of qubits on nodes, plus each qubit's role."""

    nodes: tuple[NodeId, ...]
    assignment: Mapping[int, int]
    roles: Mapping[int, Role] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "assignment", dict(self.assignment))
        roles = {q: Role(r) for q, r in self.roles.items()}
        for q in self.assignment:
            roles.setdefault(q, Role.COMPUTATION)
        object.__setattr__(self, "roles", roles)

    def node_of(self, q: int) -> int:
        return self.assignment[q]

    def role_of(self, q: int) -> Role:
        return self.roles.get(q, Role.COMPUTATION)

    def node(self, node_id: int) -> NodeId:
        return self.nodes[node_id]

    def relabel(self, mapping: Mapping[int, int]) -> Partition:
        """Permute node ids by the bijection ``mapping`` (old id -> new id)."""
        nodes = sorted((NodeId(mapping[n.id], n.label) for n in self.nodes), key=lambda n: n.id)
        assignment = {q: mapping[n] for q, n in self.assignment.items()}
        return Partition(tuple(nodes), assignment, self.roles)


@dataclass(frozen=True)
class Circuit:
    qubits: tuple[QubitRef, ...]
    partition: Partition
    gates: tuple[Gate, ...] = ()
    cbits: tuple[ClassicalBit, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "cbits", tuple(self.cbits))

    @classmethod
    def from_layout(
        cls,
        num_qubits: int,
        gates: Iterable[Gate] = (),
        *,
        nodes: Sequence[int] | None = None,
        node_labels: Sequence[str] | None = None,
        roles: Mapping[int, Role] | None = None,
        labels: Sequence[str] | None = None,
        name: str = "",
    ) -> Circuit:
        """Build a circuit on qubits ``0..num_qubits-1``.

        ``nodes[i]`` is the node of qubit ``i``; by default every qubit gets its
        own node. Classical bits are created for every ``Measure`` in ``gates``.
        """
        if nodes is None:
            nodes = list(range(num_qubits))
        num_nodes = max(nodes, default=-1) + 1
        if node_labels is None:
            node_labels = [None] * num_nodes
        qubits = tuple(
            QubitRef(i, labels[i] if labels is not None else f"q_{i}") for i in range(num_qubits)
        )
        partition = Partition(
            tuple(NodeId(i, node_labels[i]) for i in range(num_nodes)),
            {i: nodes[i] for i in range(num_qubits)},
            {i: (roles or {}).get(i, Role.COMPUTATION) for i in range(num_qubits)},
        )
        gates = tuple(gates)
        cbits = tuple(
            ClassicalBit(g.out, f"m_{g.out}") for g in gates if isinstance(g, Measure)
        )
        return cls(qubits, partition, gates, cbits, name)

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    @property
    def qubit_ids(self) -> tuple[int, ...]:
        return tuple(q.id for q in self.qubits)

    def qubits_with_role(self, *roles: Role) -> tuple[int, ...]:
        return tuple(q.id for q in self.qubits if self.partition.role_of(q.id) in roles)

    def node_of(self, q: int) -> int:
        return self.partition.node_of(q)

    def with_gates(self, gates: Iterable[Gate]) -> Circuit:
        return replace(self, gates=tuple(gates))

    def __len__(self) -> int:
        return len(self.gates)


def concat(first: Circuit, second: Circuit, name: str | None = None) -> Circuit:
    """Sequential composition: ``first`` then ``second`` over the same layout."""
    if first.qubits != second.qubits or first.partition != second.partition:
        raise ValueError("circuits must share qubits and partition to be concatenated")
    cbits = {b.id: b for b in first.cbits + second.cbits}
    return Circuit(
        first.qubits,
        first.partition,
        first.gates + second.gates,
        tuple(cbits[k] for k in sorted(cbits)),
        first.name if name is None else name,
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    index: int | None  # gate index, None for circuit-level problems
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        where = "circuit" if self.index is None else str(self.index)
        return f"{self.rule}@{where}" + (f": {self.detail}" if self.detail else "")


def _unitary_problem(u: OneQubitUnitary) -> tuple[str, str] | None:
    if u.kind not in UNITARY_KINDS:
        return "UnknownUnitary", u.kind
    if u.kind in _ANGLE_KINDS:
        if u.theta is None or not math.isfinite(u.theta):
            return "NonFiniteAngle", f"{u.kind} angle {u.theta!r}"
    if u.kind == "Custom":
        if u.entries is None:
            return "NonUnitary", "custom unitary without a matrix"
        m = u.matrix()
        if not np.all(np.isfinite(m)):
            return "NonFiniteAngle", "custom matrix has non-finite entries"
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > UNITARY_TOL:
            return "NonUnitary", "custom matrix is not unitary"
    return None


def validate(c: Circuit) -> list[Violation]:
    """Return every invariant violation in ``c`` (empty list means clean)."""
    out: list[Violation] = []
    part = c.partition

    seen: set[int] = set()
    for q in c.qubits:
        if q.id < 0 or q.id in seen:
            out.append(Violation(None, "DuplicateQubitId", f"qubit id {q.id}"))
        seen.add(q.id)
        if q.id not in part.assignment:
            out.append(Violation(None, "UnassignedQubit", f"qubit {q.id} has no node"))
        elif not 0 <= part.assignment[q.id] < len(part.nodes):
            out.append(Violation(None, "UnknownNode", f"qubit {q.id} on node {part.assignment[q.id]}"))
    if [n.id for n in part.nodes] != list(range(len(part.nodes))):
        out.append(Violation(None, "NodeIdsNotDense", str([n.id for n in part.nodes])))
    stray = set(part.assignment) - seen
    if stray:
        out.append(Violation(None, "StrayAssignment", f"unknown qubits {sorted(stray)}"))

    cbit_ids: set[int] = set()
    for b in c.cbits:
        if b.id < 0 or b.id in cbit_ids:
            out.append(Violation(None, "DuplicateCbitId", f"cbit id {b.id}"))
        cbit_ids.add(b.id)

    written: set[int] = set()
    measured_comm: set[int] = set()
    for i, g in enumerate(c.gates):
        if not isinstance(g, GATE_TYPES):
            out.append(Violation(i, "UnknownGateKind", type(g).__name__))
            continue
        qs = g.qubits
        for q in qs:
            if q not in seen:
                out.append(Violation(i, "UnknownQubit", f"qubit {q}"))
        if len(set(qs)) != len(qs):
            out.append(Violation(i, "DuplicateQubitInGate", f"qubits {qs}"))
        if isinstance(g, GhzPrep) and len(qs) < 2:
            out.append(Violation(i, "GhzTooSmall", f"{len(qs)} members"))
        if isinstance(g, FanOut) and not g.targets:
            out.append(Violation(i, "EmptyFanOut"))
        for u in gate_unitaries(g):
            problem = _unitary_problem(u)
            if problem:
                out.append(Violation(i, *problem))
        reused = measured_comm.intersection(qs)
        if reused:
            out.append(Violation(i, "CommQubitReused", f"qubits {sorted(reused)}"))
        if isinstance(g, Conditioned):
            if not g.cond.bits:
                out.append(Violation(i, "EmptyCondition"))
            if len(set(g.cond.bits)) != len(g.cond.bits):
                out.append(Violation(i, "DuplicateConditionBit", str(g.cond.bits)))
            for b in g.cond.bits:
                if b not in cbit_ids:
                    out.append(Violation(i, "UnknownCbit", f"cbit {b}"))
                elif b not in written:
                    out.append(Violation(i, "ReadBeforeWrite", f"cbit {b}"))
        if isinstance(g, Measure):
            if g.basis != "Z":
                out.append(Violation(i, "UnsupportedBasis", g.basis))
            if g.out not in cbit_ids:
                out.append(Violation(i, "UnknownCbit", f"cbit {g.out}"))
            elif g.out in written:
                out.append(Violation(i, "DoubleWrite", f"cbit {g.out}"))
            written.add(g.out)
            if g.q in seen and part.role_of(g.q) is Role.COMMUNICATION:
                measured_comm.add(g.q)
    return out


def is_valid(c: Circuit) -> bool:
    return not validate(c)


# ---------------------------------------------------------------------------
# Locality
# ---------------------------------------------------------------------------


class LocalityKind(enum.Enum):
    LOCAL = "local"
    REMOTE_CONTROLLED = "remote-controlled"
    REMOTE_FANOUT = "remote-fanout"


@dataclass(frozen=True)
class Locality:
    kind: LocalityKind
    remote_nodes: frozenset[int] = frozenset()
    local_targets: tuple[int, ...] = ()

    @property
    def is_remote(self) -> bool:
        return self.kind is not LocalityKind.LOCAL


LOCAL = Locality(LocalityKind.LOCAL)


def gate_locality(c: Circuit, g: Gate) -> Locality:
    """Classify ``g`` against ``c``'s partition without checking membership.

    Resource markers, measurements and classically conditioned gates act on
    node-local qubits (or on pre-shared entanglement) and count as local.
    """
    node = c.partition.node_of
    if isinstance(g, Controlled):
        cn, tn = node(g.control), node(g.target)
        if cn == tn:
            return LOCAL
        return Locality(LocalityKind.REMOTE_CONTROLLED, frozenset({tn}))
    if isinstance(g, FanOut):
        cn = node(g.control)
        remote = frozenset(node(t) for t in g.target_qubits if node(t) != cn)
        if not remote:
            return LOCAL
        local = tuple(t for t in g.target_qubits if node(t) == cn)
        return Locality(LocalityKind.REMOTE_FANOUT, remote, local)
    return LOCAL


def locality(c: Circuit, g: Gate) -> Locality:
    if g not in c.gates:
        raise ValueError("gate does not belong to the circuit")
    return gate_locality(c, g)


def remote_gate_indices(c: Circuit) -> list[int]:
    return [i for i, g in enumerate(c.gates) if gate_locality(c, g).is_remote]


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------


class CircuitFormatError(ValueError):
    """Raised by :func:`deserialize` with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_GATE_KINDS = {
    Local1Q: "local1q",
    Controlled: "controlled",
    FanOut: "fanout",
    BellPrep: "bell_prep",
    GhzPrep: "ghz_prep",
    Measure: "measure",
    Conditioned: "conditioned",
    Barrier: "barrier",
}


def _unitary_to_json(u: OneQubitUnitary) -> dict[str, Any]:
    if u.kind in _ANGLE_KINDS:
        return {"kind": u.kind, "theta": u.theta}
    if u.kind == "Custom":
        return {"kind": "Custom", "matrix": [[[v.real, v.imag] for v in row] for row in u.entries]}
    return {"kind": u.kind}


def _gate_params(g: Gate) -> dict[str, Any]:
    if isinstance(g, Local1Q):
        return {"u": _unitary_to_json(g.u), "q": g.q}
    if isinstance(g, Controlled):
        return {"u": _unitary_to_json(g.u), "control": g.control, "target": g.target}
    if isinstance(g, FanOut):
        return {
            "control": g.control,
            "targets": [{"q": q, "u": _unitary_to_json(u)} for q, u in g.targets],
        }
    if isinstance(g, BellPrep):
        return {"a": g.a, "b": g.b}
    if isinstance(g, GhzPrep):
        return {"qubits": list(g.members), "mode": g.mode.value}
    if isinstance(g, Measure):
        return {"q": g.q, "out": g.out, "basis": g.basis}
    if isinstance(g, Conditioned):
        return {"bits": list(g.cond.bits), "u": _unitary_to_json(g.u), "q": g.q}
    if isinstance(g, Barrier):
        return {"note": g.note}
    raise TypeError(f"cannot serialize {type(g).__name__}")


def to_dict(c: Circuit) -> dict[str, Any]:
    part = c.partition
    return {
        "name": c.name,
        "nodes": [{"id": n.id, "label": n.label} for n in part.nodes],
        "qubits": [
            {
                "id": q.id,
                "label": q.label,
                "node": part.assignment.get(q.id),
                "role": part.role_of(q.id).value,
            }
            for q in c.qubits
        ],
        "cbits": [{"id": b.id, "label": b.label} for b in c.cbits],
        "gates": [{"kind": _GATE_KINDS[type(g)], "params": _gate_params(g)} for g in c.gates],
    }


def serialize(c: Circuit) -> str:
    """Canonical JSON text for ``c``. Floats use ``repr`` so they round-trip exactly."""
    return json.dumps(to_dict(c), indent=2) + "\n"


class _Reader:
    """Typed field access that reports the JSON path on failure."""

    def __init__(self, obj: Any, path: str):
        if not isinstance(obj, dict):
            raise CircuitFormatError(path, f"expected an object, got {type(obj).__name__}")
        self.obj = obj
        self.path = path

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, default: Any = ...) -> Any:
        if key not in self.obj:
            if default is ...:
                raise CircuitFormatError(self.sub(key), "missing field")
            return default
        return self.obj[key]

    def int(self, key: str) -> int:
        v = self.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise CircuitFormatError(self.sub(key), f"expected a non-negative integer, got {v!r}")
        return v

    def float(self, key: str) -> float:
        v = self.get(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise CircuitFormatError(self.sub(key), f"expected a number, got {v!r}")
        if not math.isfinite(v):
            raise CircuitFormatError(self.sub(key), f"angle must be finite, got {v!r}")
        return float(v)

    def str(self, key: str, default: Any = ...) -> str | None:
        v = self.get(key, default)
        if v is not None and not isinstance(v, str):
            raise CircuitFormatError(self.sub(key), f"expected a string, got {v!r}")
        return v

    def list(self, key: str) -> list:
        v = self.get(key)
        if not isinstance(v, list):
            raise CircuitFormatError(self.sub(key), "expected a list")
        return v

    def ints(self, key: str) -> tuple[int, ...]:
        items = self.list(key)
        for i, v in enumerate(items):
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise CircuitFormatError(f"{self.sub(key)}[{i}]", f"expected a non-negative integer, got {v!r}")
        return tuple(items)


def _unitary_from_json(obj: Any, path: str) -> OneQubitUnitary:
    r = _Reader(obj, path)
    kind = r.str("kind")
    if kind not in UNITARY_KINDS:
        raise CircuitFormatError(r.sub("kind"), f"unknown unitary kind {kind!r}")
    if kind in _ANGLE_KINDS:
        return OneQubitUnitary(kind, r.float("theta"))
    if kind == "Custom":
        rows = r.list("matrix")
        try:
            m = [[complex(float(re), float(im)) for re, im in row] for row in rows]
            u = Custom(m)
        except (TypeError, ValueError) as exc:
            raise CircuitFormatError(r.sub("matrix"), f"malformed 2x2 complex matrix ({exc})") from None
        problem = _unitary_problem(u)
        if problem:
            raise CircuitFormatError(r.sub("matrix"), problem[1])
        return u
    return OneQubitUnitary(kind)


def _gate_from_json(obj: Any, path: str) -> Gate:
    r = _Reader(obj, path)
    kind = r.str("kind")
    p = _Reader(r.get("params"), r.sub("params"))
    u = lambda key="u": _unitary_from_json(p.get(key), p.sub(key))  # noqa: E731
    if kind == "local1q":
        return Local1Q(u(), p.int("q"))
    if kind == "controlled":
        return Controlled(u(), p.int("control"), p.int("target"))
    if kind == "fanout":
        targets = []
        for i, t in enumerate(p.list("targets")):
            tr = _Reader(t, f"{p.sub('targets')}[{i}]")
            targets.append((tr.int("q"), _unitary_from_json(tr.get("u"), tr.sub("u"))))
        return FanOut(p.int("control"), tuple(targets))
    if kind == "bell_prep":
        return BellPrep(p.int("a"), p.int("b"))
    if kind == "ghz_prep":
        mode = p.str("mode", GhzMode.ONESHOT.value)
        if mode not in {m.value for m in GhzMode}:
            raise CircuitFormatError(p.sub("mode"), f"unknown GHZ mode {mode!r}")
        return GhzPrep(p.ints("qubits"), GhzMode(mode))
    if kind == "measure":
        basis = p.str("basis", "Z")
        if basis != "Z":
            raise CircuitFormatError(p.sub("basis"), f"unsupported basis {basis!r}")
        return Measure(p.int("q"), p.int("out"))
    if kind == "conditioned":
        bits = p.ints("bits")
        if not bits:
            raise CircuitFormatError(p.sub("bits"), "condition needs at least one bit")
        return Conditioned(ParityCondition(bits), u(), p.int("q"))
    if kind == "barrier":
        return Barrier(p.str("note", "") or "")
    raise CircuitFormatError(r.sub("kind"), f"unknown gate kind {kind!r}")


def from_dict(obj: Any) -> Circuit:
    r = _Reader(obj, "")
    name = r.str("name", "") or ""
    qubits, assignment, roles = [], {}, {}
    for i, q in enumerate(r.list("qubits")):
        qr = _Reader(q, f"qubits[{i}]")
        qid = qr.int("id")
        qubits.append(QubitRef(qid, qr.str("label", None)))
        assignment[qid] = qr.int("node")
        role = qr.str("role", Role.COMPUTATION.value)
        if role not in {x.value for x in Role}:
            raise CircuitFormatError(qr.sub("role"), f"unknown role {role!r}")
        roles[qid] = Role(role)
    if "nodes" in r.obj:
        nodes = []
        for i, n in enumerate(r.list("nodes")):
            nr = _Reader(n, f"nodes[{i}]")
            nodes.append(NodeId(nr.int("id"), nr.str("label", None)))
    else:
        nodes = [NodeId(i) for i in range(max(assignment.values(), default=-1) + 1)]
    cbits = []
    for i, b in enumerate(r.get("cbits", [])):
        br = _Reader(b, f"cbits[{i}]")
        cbits.append(ClassicalBit(br.int("id"), br.str("label", None)))
    gates = [_gate_from_json(g, f"gates[{i}]") for i, g in enumerate(r.list("gates"))]
    c = Circuit(tuple(qubits), Partition(tuple(nodes), assignment, roles), tuple(gates), tuple(cbits), name)
    problems = validate(c)
    if problems:
        first = problems[0]
        path = "circuit" if first.index is None else f"gates[{first.index}]"
        raise CircuitFormatError(path, "; ".join(str(v) for v in problems))
    return c


def deserialize(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return from_dict(obj)
