"""Rewrite remote gates into local gates, shared entanglement and corrections.

Two primitives do all the work:

* ``expand_dcu`` turns a controlled-U whose control and target sit on
  different nodes into a Bell pair, a cat-entangler (CNOT, measure, X
  correction), the local controlled-U and a cat-disentangler (H, measure, Z
  correction on the control).
* ``expand_dfanout`` does the same for a fan-out with targets on several
  nodes, sharing the control through one GHZ state with a single
  communication qubit per remote node.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from .ir import (
    H,
    X,
    Z,
    BellPrep,
    Circuit,
    ClassicalBit,
    Conditioned,
    Controlled,
    FanOut,
    Gate,
    GhzMode,
    GhzPrep,
    Local1Q,
    LocalityKind,
    Measure,
    NodeId,
    ParityCondition,
    Partition,
    QubitRef,
    Role,
    gate_locality,
)


class ProtocolError(ValueError):
    pass


class Strategy(str, enum.Enum):
    BELL_ONLY = "bell-only"
    FANOUT = "fanout"


@dataclass
class ExpansionResult:
    circuit: Circuit
    new_comm_qubits: list[QubitRef] = field(default_factory=list)
    new_cbits: list[ClassicalBit] = field(default_factory=list)
    resources_emitted: list[Gate] = field(default_factory=list)


class _Rewriter:
    """Allocates fresh communication qubits and classical bits for one circuit."""

    def __init__(self, c: Circuit):
        self.base = c
        self.next_qubit = max(c.qubit_ids, default=-1) + 1
        self.next_cbit = max((b.id for b in c.cbits), default=-1) + 1
        self.qubits: list[QubitRef] = []
        self.cbits: list[ClassicalBit] = []
        self.assignment: dict[int, int] = {}
        self.resources: list[Gate] = []

    def node_of(self, q: int) -> int:
        if q in self.assignment:
            return self.assignment[q]
        return self.base.partition.node_of(q)

    def comm(self, node: int, label: str) -> int:
        q = self.next_qubit
        self.next_qubit += 1
        self.qubits.append(QubitRef(q, label))
        self.assignment[q] = node
        return q

    def cbit(self, label: str) -> int:
        b = self.next_cbit
        self.next_cbit += 1
        self.cbits.append(ClassicalBit(b, label))
        return b

    def resource(self, g: Gate) -> Gate:
        self.resources.append(g)
        return g

    def result(self, gates: Sequence[Gate]) -> ExpansionResult:
        c = self.base
        part = c.partition
        roles = dict(part.roles)
        roles.update({q.id: Role.COMMUNICATION for q in self.qubits})
        partition = Partition(part.nodes, {**part.assignment, **self.assignment}, roles)
        circuit = Circuit(
            c.qubits + tuple(self.qubits),
            partition,
            tuple(gates),
            c.cbits + tuple(self.cbits),
            c.name,
        )
        return ExpansionResult(circuit, list(self.qubits), list(self.cbits), list(self.resources))

    # -- protocol bodies ---------------------------------------------------

    def dcu(self, g: Controlled, tag: str) -> list[Gate]:
        e0 = self.comm(self.node_of(g.control), f"a0.{tag}")
        e1 = self.comm(self.node_of(g.target), f"a1.{tag}")
        m0, m1 = self.cbit(f"m0.{tag}"), self.cbit(f"m1.{tag}")
        return [
            self.resource(BellPrep(e0, e1)),
            Controlled(X, g.control, e0),
            Measure(e0, m0),
            Conditioned(ParityCondition((m0,)), X, e1),
            Controlled(g.u, e1, g.target),
            Local1Q(H, e1),
            Measure(e1, m1),
            Conditioned(ParityCondition((m1,)), Z, g.control),
        ]

    def dfanout(self, g: FanOut, tag: str, mode: GhzMode) -> list[Gate]:
        home = self.node_of(g.control)
        local: list[Gate] = []
        groups: dict[int, list[tuple[int, object]]] = {}
        for t, u in g.targets:
            node = self.node_of(t)
            if node == home:
                local.append(Controlled(u, g.control, t))
            else:
                groups.setdefault(node, []).append((t, u))
        if not groups:
            raise ProtocolError("fan-out has no remote targets")

        a0 = self.comm(home, f"a0.{tag}")
        comms = [self.comm(node, f"a{i}.{tag}") for i, node in enumerate(groups, start=1)]
        m0 = self.cbit(f"m0.{tag}")
        members = (a0, *comms)
        if len(members) == 2:
            prep = BellPrep(a0, comms[0])
        else:
            prep = GhzPrep(members, mode)

        seq: list[Gate] = local + [
            self.resource(prep),
            Controlled(X, g.control, a0),
            Measure(a0, m0),
        ]
        seq += [Conditioned(ParityCondition((m0,)), X, a) for a in comms]
        for a, targets in zip(comms, groups.values()):
            seq += [Controlled(u, a, t) for t, u in targets]
        outs = []
        for i, a in enumerate(comms, start=1):
            m = self.cbit(f"m{i}.{tag}")
            outs.append(m)
            seq += [Local1Q(H, a), Measure(a, m)]
        seq.append(Conditioned(ParityCondition(tuple(outs)), Z, g.control))
        return seq

    def ghz_tree(self, members: Sequence[int], tag: str) -> tuple[list[Gate], int, int]:
        """Gates preparing GHZ on ``members`` from Bell pairs merged pairwise.

        Returns ``(gates, bell_pairs_used, merge_layers)``.
        """
        groups = [[q] for q in members]
        gates: list[Gate] = []
        pairs = layers = 0
        while len(groups) > 1:
            layers += 1
            merged = []
            for j in range(0, len(groups) - 1, 2):
                a, b = groups[j], groups[j + 1]
                gates += self._merge(a, b, f"{tag}.l{layers}.{j // 2}")
                pairs += 1
                merged.append(a + b)
            if len(groups) % 2:
                merged.append(groups[-1])
            groups = merged
        return gates, pairs, layers

    def _merge(self, a: list[int], b: list[int], tag: str) -> list[Gate]:
        """Join two GHZ groups (a singleton is a fresh |0> qubit) with one Bell pair."""
        if len(a) == 1 and len(b) == 1:
            return [self.resource(BellPrep(a[0], b[0]))]
        if len(b) == 1:
            return self._extend(a[-1], b[0], tag)
        if len(a) == 1:
            return self._extend(b[0], a[0], tag)
        x = self.comm(self.node_of(a[-1]), f"x.{tag}")
        y = self.comm(self.node_of(b[0]), f"y.{tag}")
        mx, my = self.cbit(f"mx.{tag}"), self.cbit(f"my.{tag}")
        # after the CNOTs x = a^c and y = b^c, so mx^my = a^b
        return [
            self.resource(BellPrep(x, y)),
            Controlled(X, a[-1], x),
            Controlled(X, b[0], y),
            Measure(x, mx),
            Measure(y, my),
        ] + [Conditioned(ParityCondition((mx, my)), X, q) for q in b]

    def _extend(self, anchor: int, fresh: int, tag: str) -> list[Gate]:
        x = self.comm(self.node_of(anchor), f"x.{tag}")
        m = self.cbit(f"mx.{tag}")
        return [
            self.resource(BellPrep(x, fresh)),
            Controlled(X, anchor, x),
            Measure(x, m),
            Conditioned(ParityCondition((m,)), X, fresh),
        ]


def _gate_at(c: Circuit, gate_idx: int) -> Gate:
    if not 0 <= gate_idx < len(c.gates):
        raise ProtocolError(f"gate index {gate_idx} out of range")
    return c.gates[gate_idx]


def expand_dcu(c: Circuit, gate_idx: int) -> ExpansionResult:
    """Replace the remote controlled gate at ``gate_idx`` with the Bell-pair protocol."""
    g = _gate_at(c, gate_idx)
    if not isinstance(g, Controlled):
        raise ProtocolError(f"gate {gate_idx} is {type(g).__name__}, expected Controlled")
    if gate_locality(c, g).kind is not LocalityKind.REMOTE_CONTROLLED:
        raise ProtocolError(f"gate {gate_idx} is local; nothing to expand")
    rw = _Rewriter(c)
    seq = rw.dcu(g, f"g{gate_idx}")
    return rw.result(c.gates[:gate_idx] + tuple(seq) + c.gates[gate_idx + 1 :])


def expand_dfanout(c: Circuit, gate_idx: int, ghz_mode: GhzMode = GhzMode.ONESHOT) -> ExpansionResult:
    """Replace the remote fan-out at ``gate_idx`` with the GHZ-based protocol.

    Targets on the control's node stay as local controlled gates; all targets
    on one remote node share that node's communication qubit. A single remote
    node uses a Bell pair, which makes the result identical to ``expand_dcu``.
    """
    g = _gate_at(c, gate_idx)
    if not isinstance(g, FanOut):
        raise ProtocolError(f"gate {gate_idx} is {type(g).__name__}, expected FanOut")
    if gate_locality(c, g).kind is not LocalityKind.REMOTE_FANOUT:
        raise ProtocolError(f"fan-out {gate_idx} has no remote targets")
    rw = _Rewriter(c)
    seq = rw.dfanout(g, f"g{gate_idx}", GhzMode(ghz_mode))
    return rw.result(c.gates[:gate_idx] + tuple(seq) + c.gates[gate_idx + 1 :])


def lower_fanout(g: FanOut) -> list[Controlled]:
    """Split a fan-out into controlled gates, ordered by target qubit id."""
    return [Controlled(u, g.control, t) for t, u in sorted(g.targets, key=lambda tu: tu[0])]


def expand_all(
    c: Circuit,
    strategy: Strategy = Strategy.FANOUT,
    ghz_mode: GhzMode = GhzMode.ONESHOT,
) -> ExpansionResult:
    """Expand every remote gate of ``c``; the result has no remote gates."""
    strategy, ghz_mode = Strategy(strategy), GhzMode(ghz_mode)
    rw = _Rewriter(c)
    out: list[Gate] = []
    for i, g in enumerate(c.gates):
        loc = gate_locality(c, g)
        if not loc.is_remote:
            out.append(g)
        elif isinstance(g, Controlled):
            out += rw.dcu(g, f"g{i}")
        elif strategy is Strategy.FANOUT:
            out += rw.dfanout(g, f"g{i}", ghz_mode)
        else:
            for j, cg in enumerate(lower_fanout(g)):
                if gate_locality(c, cg).is_remote:
                    out += rw.dcu(cg, f"g{i}.{j}")
                else:
                    out.append(cg)
    if not rw.qubits:
        return ExpansionResult(c)
    return rw.result(out)


@dataclass
class GhzTree:
    circuit: Circuit
    members: tuple[int, ...]
    bell_pairs_used: int
    merge_layers: int


def ghz_prepare_tree(nodes: Sequence[NodeId | int], root: NodeId | int) -> GhzTree:
    """Standalone circuit building a GHZ state across ``nodes`` from Bell pairs.

    Member ``i`` of the result lives on the ``i``-th node of ``[root] + rest``.
    Groups are merged pairwise in index order, so ``ceil(log2 k)`` layers
    consume ``k - 1`` Bell pairs.
    """
    nodes = [n if isinstance(n, NodeId) else NodeId(int(n)) for n in nodes]
    root_id = root.id if isinstance(root, NodeId) else int(root)
    k = len(nodes)
    if k < 2:
        raise ProtocolError(f"a GHZ tree needs at least 2 nodes, got {k}")
    ids = [n.id for n in nodes]
    if len(set(ids)) != k:
        raise ProtocolError(f"repeated node in {ids}")
    if root_id not in ids:
        raise ProtocolError(f"root {root_id} is not among the nodes {ids}")
    order = [root_id] + [i for i in ids if i != root_id]
    known = {n.id: n for n in nodes}
    table = tuple(known.get(i, NodeId(i)) for i in range(max(ids) + 1))
    members = tuple(range(k))
    base = Circuit(
        tuple(QubitRef(q, f"g{q}") for q in members),
        Partition(
            table,
            {q: order[q] for q in members},
            {q: Role.COMMUNICATION for q in members},
        ),
        name=f"ghz-tree-{k}",
    )
    rw = _Rewriter(base)
    gates, pairs, layers = rw.ghz_tree(members, "tree")
    assert layers == math.ceil(math.log2(k))
    return GhzTree(rw.result(gates).circuit, members, pairs, layers)


def inline_ghz_trees(c: Circuit) -> ExpansionResult:
    """Replace every tree-mode ``GhzPrep`` with explicit Bell pairs and fusions."""
    rw = _Rewriter(c)
    out: list[Gate] = []
    for i, g in enumerate(c.gates):
        if isinstance(g, GhzPrep) and g.mode is GhzMode.TREE:
            gates, _, _ = rw.ghz_tree(g.members, f"ghz{i}")
            out += gates
        else:
            out.append(g)
    if not rw.qubits and not rw.resources:
        return ExpansionResult(c)
    return rw.result(out)
