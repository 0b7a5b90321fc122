import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfanout.ir import (
    H,
    X,
    Z,
    BellPrep,
    Circuit,
    Conditioned,
    Controlled,
    Custom,
    FanOut,
    GhzMode,
    GhzPrep,
    Local1Q,
    Measure,
    Role,
    Rz,
    remote_gate_indices,
    validate,
)
from dfanout.protocols import (
    ProtocolError,
    Strategy,
    expand_all,
    expand_dcu,
    expand_dfanout,
    ghz_prepare_tree,
    inline_ghz_trees,
    lower_fanout,
)
from dfanout.sim import StateVector, run_branches, subsystem_fidelity, unitary_of
from oracles import controlled_matrix, ghz_vector, haar_state, haar_unitary

TOL = 1e-9


def assert_implements(expanded, oracle_matrix, qubits, rng, trials=20):
    """Every branch of ``expanded`` carries oracle_matrix @ psi on ``qubits``."""
    for _ in range(trials):
        psi = haar_state(rng, len(qubits))
        want = StateVector(oracle_matrix @ psi, qubits)
        branches = run_branches(expanded, StateVector(psi, qubits))
        assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-9)
        for b in branches:
            assert 1 - subsystem_fidelity(b.state, want) < TOL, b.outcomes
    return branches


def fanout_oracle(g, n):
    m = np.eye(2**n, dtype=complex)
    for t, u in g.targets:
        m = controlled_matrix(u.matrix(), g.control, t, n) @ m
    return m


# --- Bell-pair controlled gate ------------------------------------------------


def test_remote_cnot(rng):
    g = Controlled(X, 0, 1)
    c = Circuit.from_layout(2, [g], node_labels=["A", "B"])
    res = expand_dcu(c, 0)
    assert remote_gate_indices(res.circuit) == []
    assert len(res.new_comm_qubits) == 2 and len(res.new_cbits) == 2
    assert res.resources_emitted == [BellPrep(2, 3)]
    branches = assert_implements(res.circuit, controlled_matrix(X.matrix(), 0, 1, 2), (0, 1), rng)
    assert [b.probability for b in branches] == pytest.approx([0.25] * 4)


@pytest.mark.parametrize("flip", [False, True])
def test_remote_random_unitary(rng, flip):
    u = haar_unitary(rng)
    control, target = (1, 0) if flip else (0, 1)
    c = Circuit.from_layout(2, [Controlled(Custom(u), control, target)])
    res = expand_dcu(c, 0)
    assert_implements(res.circuit, controlled_matrix(u, control, target, 2), (0, 1), rng)


def test_dcu_inside_larger_circuit(rng):
    u = haar_unitary(rng)
    gates = [Local1Q(H, 2), Controlled(Custom(u), 0, 2), Local1Q(Rz(0.4), 1)]
    c = Circuit.from_layout(3, gates, nodes=[0, 0, 1])
    res = expand_dcu(c, 1)
    assert res.circuit.gates[0] == gates[0] and res.circuit.gates[-1] == gates[2]
    assert_implements(res.circuit, unitary_of(c), (0, 1, 2), rng, trials=5)


def test_expand_dcu_rejects_local_or_wrong_gate():
    c = Circuit.from_layout(2, [Controlled(X, 0, 1), Local1Q(H, 0)], nodes=[0, 0])
    with pytest.raises(ProtocolError):
        expand_dcu(c, 0)
    with pytest.raises(ProtocolError):
        expand_dcu(c, 1)
    with pytest.raises(ProtocolError):
        expand_dcu(c, 7)


# --- GHZ fan-out ----------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("mode", list(GhzMode))
def test_fanout_to_k_nodes(rng, k, mode):
    us = [Custom(haar_unitary(rng)) for _ in range(k)]
    g = FanOut(0, [(i + 1, us[i]) for i in range(k)])
    c = Circuit.from_layout(k + 1, [g])
    res = expand_dfanout(c, 0, mode)
    assert remote_gate_indices(res.circuit) == []
    assert len(res.new_comm_qubits) == k + 1
    prep = res.resources_emitted[0]
    assert isinstance(prep, BellPrep if k == 1 else GhzPrep)
    branches = assert_implements(res.circuit, fanout_oracle(g, k + 1), tuple(range(k + 1)), rng)
    assert len(branches) == 2 ** (k + 1)
    assert [b.probability for b in branches] == pytest.approx([2.0 ** -(k + 1)] * len(branches))


def test_fanout_three_nodes_mixed_unitaries(rng):
    g = FanOut(0, [(1, X), (2, Z), (3, H)])
    c = Circuit.from_layout(4, [g], node_labels=["home", "A", "B", "C"])
    res = expand_dfanout(c, 0)
    (prep,) = res.resources_emitted
    assert isinstance(prep, GhzPrep) and len(prep.members) == 4
    assert_implements(res.circuit, fanout_oracle(g, 4), (0, 1, 2, 3), rng)


def test_fanout_shares_one_comm_qubit_per_node(rng):
    g = FanOut(0, [(1, X), (2, Custom(haar_unitary(rng))), (3, Rz(0.9)), (4, H)])
    c = Circuit.from_layout(5, [g], nodes=[0, 0, 1, 1, 2])
    res = expand_dfanout(c, 0)
    # control side + nodes 1 and 2
    assert len(res.new_comm_qubits) == 3
    assert res.circuit.gates[0] == Controlled(X, 0, 1)
    assert_implements(res.circuit, fanout_oracle(g, 5), tuple(range(5)), rng, trials=10)


def test_single_remote_node_matches_dcu():
    u = Custom(haar_unitary(np.random.default_rng(3)))
    via_fanout = expand_dfanout(Circuit.from_layout(2, [FanOut(0, [(1, u)])]), 0).circuit
    via_dcu = expand_dcu(Circuit.from_layout(2, [Controlled(u, 0, 1)]), 0).circuit
    assert via_fanout.gates == via_dcu.gates
    assert via_fanout.qubits == via_dcu.qubits
    assert via_fanout.cbits == via_dcu.cbits
    assert via_fanout.partition == via_dcu.partition


def test_expand_dfanout_rejects_all_local():
    c = Circuit.from_layout(3, [FanOut(0, [(1, X), (2, X)])], nodes=[0, 0, 0])
    with pytest.raises(ProtocolError):
        expand_dfanout(c, 0)


def test_communication_qubit_hygiene():
    g = FanOut(0, [(1, X), (2, X), (3, X)])
    c = Circuit.from_layout(4, [Controlled(X, 0, 1), g])
    res = expand_all(c)
    out = res.circuit
    new = {q.id for q in res.new_comm_qubits}
    assert all(out.partition.role_of(q) is Role.COMMUNICATION for q in new)
    for q in new:
        uses = [i for i, gate in enumerate(out.gates) if q in gate.qubits]
        measures = [i for i in uses if isinstance(out.gates[i], Measure)]
        # prepared by a resource gate, measured exactly once, never touched afterwards
        assert isinstance(out.gates[uses[0]], (BellPrep, GhzPrep))
        assert measures == [uses[-1]]
    assert validate(out) == []


def test_lower_fanout_orders_by_target():
    g = FanOut(0, [(3, X), (1, Z), (2, H)])
    assert lower_fanout(g) == [Controlled(Z, 0, 1), Controlled(H, 0, 2), Controlled(X, 0, 3)]


def test_bell_only_strategy_uses_one_pair_per_target(rng):
    g = FanOut(0, [(1, X), (2, Z), (3, H)])
    c = Circuit.from_layout(4, [g])
    res = expand_all(c, Strategy.BELL_ONLY)
    assert [type(r) for r in res.resources_emitted] == [BellPrep] * 3
    assert_implements(res.circuit, fanout_oracle(g, 4), (0, 1, 2, 3), rng, trials=5)


def test_expand_all_without_remote_gates_is_identity():
    c = Circuit.from_layout(2, [Controlled(X, 0, 1)], nodes=[0, 0])
    res = expand_all(c)
    assert res.circuit is c
    assert res.new_comm_qubits == [] and res.resources_emitted == []


@st.composite
def partitioned_circuits(draw):
    n = draw(st.integers(2, 5))
    nodes = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    # make the node table dense
    relabel = {v: i for i, v in enumerate(sorted(set(nodes)))}
    nodes = [relabel[v] for v in nodes]
    gates = []
    for _ in range(draw(st.integers(0, 6))):
        kind = draw(st.sampled_from(["1q", "cu", "fan"]))
        if kind == "1q":
            gates.append(Local1Q(draw(st.sampled_from([H, X, Z, Rz(0.3)])), draw(st.integers(0, n - 1))))
            continue
        control = draw(st.integers(0, n - 1))
        others = [q for q in range(n) if q != control]
        if kind == "cu":
            gates.append(Controlled(X, control, draw(st.sampled_from(others))))
        else:
            targets = draw(st.lists(st.sampled_from(others), min_size=1, unique=True))
            gates.append(FanOut(control, [(t, X) for t in targets]))
    return Circuit.from_layout(n, gates, nodes=nodes)


@settings(max_examples=60, deadline=None)
@given(
    c=partitioned_circuits(),
    strategy=st.sampled_from(list(Strategy)),
    mode=st.sampled_from(list(GhzMode)),
)
def test_expansion_preserves_validity_and_is_idempotent(c, strategy, mode):
    assert validate(c) == []
    out = expand_all(c, strategy, mode).circuit
    assert validate(out) == []
    assert remote_gate_indices(out) == []
    again = expand_all(out, strategy, mode)
    assert again.circuit == out
    assert again.new_comm_qubits == []


@settings(max_examples=25, deadline=None)
@given(c=partitioned_circuits(), seed=st.integers(0, 2**32 - 1))
def test_expansion_preserves_action(c, seed):
    rng = np.random.default_rng(seed)
    for strategy in Strategy:
        out = expand_all(c, strategy, GhzMode.TREE).circuit
        assert_implements(out, unitary_of(c), tuple(range(c.num_qubits)), rng, trials=2)


# --- tree GHZ ---------------------------------------------------------------------


@pytest.mark.parametrize("k", range(2, 9))
def test_ghz_tree_resources_and_state(k):
    tree = ghz_prepare_tree(list(range(k)), 0)
    assert tree.bell_pairs_used == k - 1
    assert tree.merge_layers == math.ceil(math.log2(k))
    preps = [g for g in tree.circuit.gates if isinstance(g, BellPrep)]
    assert len(preps) == k - 1
    assert validate(tree.circuit) == []
    target = StateVector(ghz_vector(k), tree.members)
    for b in run_branches(tree.circuit):
        assert 1 - subsystem_fidelity(b.state, target) < TOL


def test_ghz_tree_root_comes_first():
    tree = ghz_prepare_tree([4, 1, 2], 2)
    part = tree.circuit.partition
    assert [part.node_of(q) for q in tree.members] == [2, 4, 1]


def test_ghz_tree_rejects_bad_input():
    with pytest.raises(ProtocolError):
        ghz_prepare_tree([0], 0)
    with pytest.raises(ProtocolError):
        ghz_prepare_tree([0, 1], 5)
    with pytest.raises(ProtocolError):
        ghz_prepare_tree([0, 1, 1], 0)


def test_inlined_tree_fanout_still_correct(rng):
    g = FanOut(0, [(1, X), (2, Custom(haar_unitary(rng))), (3, H), (4, Rz(1.1))])
    c = Circuit.from_layout(5, [g])
    tree = expand_dfanout(c, 0, GhzMode.TREE).circuit
    inlined = inline_ghz_trees(tree)
    assert not any(isinstance(x, GhzPrep) for x in inlined.circuit.gates)
    assert len(inlined.resources_emitted) == 4  # k - 1 pairs for 5 members
    assert validate(inlined.circuit) == []
    assert_implements(inlined.circuit, fanout_oracle(g, 5), tuple(range(5)), rng, trials=3)


def test_inline_leaves_oneshot_alone():
    c = Circuit.from_layout(3, [FanOut(0, [(1, X), (2, X)])])
    one = expand_dfanout(c, 0, GhzMode.ONESHOT).circuit
    assert inline_ghz_trees(one).circuit is one


def test_corrections_are_parity_conditioned():
    c = Circuit.from_layout(4, [FanOut(0, [(1, X), (2, X), (3, X)])])
    out = expand_dfanout(c, 0).circuit
    last = out.gates[-1]
    assert isinstance(last, Conditioned) and last.u == Z and last.q == 0
    assert len(last.cond.bits) == 3
