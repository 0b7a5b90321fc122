"""Circuit families that expose fan-out structure, and a fan-out grouping pass.

All builders place qubit ``i`` on node ``i`` unless ``nodes`` is given
(``nodes[i]`` is the node of qubit ``i``).
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

from .ir import (
    H,
    P,
    X,
    Barrier,
    Circuit,
    Controlled,
    FanOut,
    Gate,
    GhzMode,
    Local1Q,
    Role,
    Rz,
    S,
    Sdg,
)
from .protocols import Strategy, expand_all


@dataclass(frozen=True)
class WeightedEdge:
    """Cost-Hamiltonian edge; ``theta`` already absorbs gamma * k_pq."""

    p: int
    q: int
    theta: float


@dataclass(frozen=True)
class PauliString:
    ops: str
    theta: float

    def __post_init__(self):
        bad = set(self.ops) - set("IXYZ")
        if not self.ops or bad:
            raise ValueError(f"invalid Pauli string {self.ops!r}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, ch in enumerate(self.ops) if ch != "I")


class ParityForm(str, enum.Enum):
    CNOT_CHAIN = "cnot-chain"
    FANOUT = "fanout"


def _controlled_block(control: int, targets: list[tuple[int, object]]) -> Gate:
    if len(targets) == 1:
        t, u = targets[0]
        return Controlled(u, control, t)
    return FanOut(control, tuple(targets))


# ---------------------------------------------------------------------------
# QFT
# ---------------------------------------------------------------------------


def build_qft_cp(n: int, nodes: Sequence[int] | None = None) -> Circuit:
    """QFT without the final bit reversal, one fan-out of phases per qubit."""
    if n < 1:
        raise ValueError(f"QFT needs n >= 1, got {n}")
    gates: list[Gate] = []
    for j in range(n):
        gates.append(Local1Q(H, j))
        targets = [(t, P(math.pi / 2 ** (t - j))) for t in range(j + 1, n)]
        if targets:
            gates.append(_controlled_block(j, targets))
    return Circuit.from_layout(n, gates, nodes=nodes, name=f"qft-cp-{n}")


def build_qft_cr(n: int, nodes: Sequence[int] | None = None) -> Circuit:
    """Textbook QFT with R_k rotations on q_j controlled by later qubits."""
    if n < 1:
        raise ValueError(f"QFT needs n >= 1, got {n}")
    gates: list[Gate] = []
    for j in range(n):
        gates.append(Local1Q(H, j))
        for t in range(j + 1, n):
            k = t - j + 1
            gates.append(Controlled(P(2 * math.pi / 2**k), t, j))
    return Circuit.from_layout(n, gates, nodes=nodes, name=f"qft-cr-{n}")


def compile_dqft(
    n: int,
    nodes: Sequence[int] | None = None,
    strategy: Strategy = Strategy.FANOUT,
    ghz_mode: GhzMode = GhzMode.ONESHOT,
    cost_model=None,
):
    """Distributed QFT: returns ``(expanded circuit, ResourceReport)``."""
    from .resources import CostModel, report

    expanded = expand_all(build_qft_cp(n, nodes), strategy, ghz_mode).circuit
    return expanded, report(expanded, cost_model or CostModel(), strategy, ghz_mode)


# ---------------------------------------------------------------------------
# QAOA cost layer
# ---------------------------------------------------------------------------


def _check_edge(e: WeightedEdge, n: int) -> None:
    if e.p == e.q:
        raise ValueError(f"self-loop edge on qubit {e.p}")
    if not (0 <= e.p < n and 0 <= e.q < n):
        raise ValueError(f"edge ({e.p}, {e.q}) out of range for {n} qubits")
    if not math.isfinite(e.theta):
        raise ValueError(f"edge ({e.p}, {e.q}) has non-finite angle")


def build_zz_term(
    e: WeightedEdge, n: int | None = None, nodes: Sequence[int] | None = None
) -> Circuit:
    """exp(-i theta Z_p Z_q) up to the global phase exp(i theta)."""
    n = max(e.p, e.q) + 1 if n is None else n
    _check_edge(e, n)
    gates = [
        Controlled(P(-4 * e.theta), e.p, e.q),
        Local1Q(Rz(2 * e.theta), e.p),
        Local1Q(Rz(2 * e.theta), e.q),
    ]
    return Circuit.from_layout(n, gates, nodes=nodes, name=f"zz-{e.p}-{e.q}")


def compile_qaoa_cost(
    edges: Sequence[WeightedEdge], n: int, nodes: Sequence[int] | None = None
) -> Circuit:
    """Product of exp(-i theta Z_p Z_q) over ``edges`` with fan-outs and deferred Rz.

    Every controlled phase is diagonal, so all of an edge's controls ``p`` can
    be gathered into one fan-out per ``p`` (in order of first appearance) and
    every Rz moved to a final layer where per-qubit angles are summed.
    """
    for e in edges:
        _check_edge(e, n)
    packets: dict[int, list[list[tuple[int, object]]]] = {}
    rz: dict[int, float] = {}
    for e in edges:
        runs = packets.setdefault(e.p, [[]])
        if any(t == e.q for t, _ in runs[-1]):
            runs.append([])
        runs[-1].append((e.q, P(-4 * e.theta)))
        for q in (e.p, e.q):
            rz[q] = rz.get(q, 0.0) + 2 * e.theta
    gates: list[Gate] = []
    for p, runs in packets.items():
        gates += [_controlled_block(p, targets) for targets in runs]
    gates += [Local1Q(Rz(angle), q) for q, angle in rz.items()]
    return Circuit.from_layout(n, gates, nodes=nodes, name=f"qaoa-cost-{n}")


# ---------------------------------------------------------------------------
# Parity gate and Pauli-string exponentials
# ---------------------------------------------------------------------------


def _parity_gates(qubits: Sequence[int], ancilla: int, form: ParityForm) -> list[Gate]:
    if ParityForm(form) is ParityForm.CNOT_CHAIN:
        return [Controlled(X, q, ancilla) for q in qubits]
    layer = [Local1Q(H, q) for q in (ancilla, *qubits)]
    return layer + [FanOut(ancilla, tuple((q, X) for q in qubits))] + layer


def build_parity_gate(
    qubits: Sequence[int],
    ancilla: int,
    form: ParityForm = ParityForm.FANOUT,
    nodes: Sequence[int] | None = None,
) -> Circuit:
    """|x>|a> -> |x>|a XOR parity(x)> as a CNOT chain or a Hadamard-conjugated fan-out."""
    if not qubits:
        raise ValueError("parity gate needs at least one qubit")
    if ancilla in qubits:
        raise ValueError(f"ancilla {ancilla} collides with a parity qubit")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit in {list(qubits)}")
    n = max(*qubits, ancilla) + 1
    return Circuit.from_layout(
        n,
        _parity_gates(qubits, ancilla, form),
        nodes=nodes,
        roles={ancilla: Role.ANCILLA},
        labels=[f"a_{i}" if i == ancilla else f"q_{i}" for i in range(n)],
        name=f"parity-{ParityForm(form).value}-{len(qubits)}",
    )


# V = S.H maps Z to Y, so exp(-i t Y) = V exp(-i t Z) V^dagger
_BASIS_IN = {"X": (H,), "Y": (Sdg, H), "Z": ()}
_BASIS_OUT = {"X": (H,), "Y": (H, S), "Z": ()}


def compile_pauli_exp(
    p: PauliString,
    nodes: Sequence[int] | None = None,
    ancilla_node: int | None = None,
    form: ParityForm = ParityForm.FANOUT,
) -> Circuit:
    """exp(-i theta P) via compute-parity, Rz(2 theta) on an ancilla, uncompute.

    Qubit ``i`` carries character ``i`` of the string; the ancilla is qubit
    ``len(p.ops)`` and ends in ``|0>`` whenever it starts there. It goes on
    ``ancilla_node``, by default a node of its own.
    """
    support = p.support
    if not support:
        raise ValueError("all-identity Pauli string is only a global phase")
    n = len(p.ops)
    ancilla = n
    nodes = list(range(n)) if nodes is None else list(nodes)
    if len(nodes) != n:
        raise ValueError(f"need {n} node assignments, got {len(nodes)}")
    if ancilla_node is None:
        ancilla_node = max(nodes) + 1
    pre = [Local1Q(u, q) for q in support for u in _BASIS_IN[p.ops[q]]]
    post = [Local1Q(u, q) for q in support for u in _BASIS_OUT[p.ops[q]]]
    parity = _parity_gates(support, ancilla, form)
    gates = pre + parity + [Local1Q(Rz(2 * p.theta), ancilla)] + parity + post
    return Circuit.from_layout(
        n + 1,
        gates,
        nodes=nodes + [ancilla_node],
        roles={ancilla: Role.ANCILLA},
        labels=[f"q_{i}" for i in range(n)] + ["a_0"],
        name=f"pauli-exp-{p.ops}",
    )


# ---------------------------------------------------------------------------
# Fan-out grouping
# ---------------------------------------------------------------------------


def _as_packet(g: Gate) -> tuple[int, list[tuple[int, object]]] | None:
    if isinstance(g, Controlled):
        return g.control, [(g.target, g.u)]
    if isinstance(g, FanOut):
        return g.control, list(g.targets)
    return None


def group_fanouts(c: Circuit) -> Circuit:
    """Greedily merge same-control controlled gates into fan-outs.

    A later gate joins the packet only if every gate it would hop over acts on
    qubits disjoint from it, so the circuit unitary is unchanged. Gates that
    were hopped over are considered as packet starts afterwards.
    """
    pending = list(c.gates)
    out: list[Gate] = []
    while pending:
        head, rest = pending[0], pending[1:]
        packet = _as_packet(head)
        if packet is None:
            out.append(head)
            pending = rest
            continue
        control, targets = packet
        kept: list[Gate] = []
        blocked: set[int] = set()
        for j, g in enumerate(rest):
            cand = _as_packet(g)
            qs = set(g.qubits)
            if (
                cand is not None
                and cand[0] == control
                and not qs & blocked
                and not {t for t, _ in cand[1]} & {t for t, _ in targets}
            ):
                targets = targets + cand[1]
                continue
            kept.append(g)
            blocked |= qs
            if control in blocked or isinstance(g, Barrier):
                kept += rest[j + 1 :]
                break
        out.append(_controlled_block(control, targets))
        pending = kept
    return c.with_gates(out)
