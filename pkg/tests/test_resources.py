import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfanout.compilers import build_qft_cp, compile_dqft
from dfanout.ir import H, X, Barrier, Circuit, Conditioned, Controlled, GhzMode, Local1Q, Measure, ParityCondition
from dfanout.protocols import Strategy, expand_all
from dfanout.resources import (
    CSV_COLUMNS,
    CostModel,
    compare_strategies,
    count_resources,
    depth,
    log_steps,
    render_csv,
    render_table,
)

MODES = {
    "bell": (Strategy.BELL_ONLY, GhzMode.ONESHOT),
    "tree": (Strategy.FANOUT, GhzMode.TREE),
    "oneshot": (Strategy.FANOUT, GhzMode.ONESHOT),
}

# frozen regression values under the default cost model
DQFT_DEPTHS = {
    4: {"bell": 24, "tree": 19, "oneshot": 18},
    6: {"bell": 40, "tree": 30, "oneshot": 28},
    8: {"bell": 56, "tree": 40, "oneshot": 38},
    16: {"bell": 120, "tree": 81, "oneshot": 78},
}


def dqft_depth(n, which, model=None):
    strategy, mode = MODES[which]
    return compile_dqft(n, strategy=strategy, ghz_mode=mode, cost_model=model)[1].depth


@pytest.mark.parametrize("n", range(2, 11))
def test_dqft_closed_forms(n):
    _, bell = compile_dqft(n, strategy=Strategy.BELL_ONLY)
    assert bell.bell_pairs == n * (n - 1) // 2
    assert bell.ghz_sizes == ()
    _, fan = compile_dqft(n, strategy=Strategy.FANOUT)
    assert fan.ghz_sizes == tuple(range(n, 2, -1))
    assert fan.bell_pairs == 1


def test_dqft_small_counts():
    assert compile_dqft(4, strategy=Strategy.BELL_ONLY)[1].bell_pairs == 6
    assert compile_dqft(5, strategy=Strategy.BELL_ONLY)[1].bell_pairs == 10


def test_local_circuit_counts_nothing():
    c = Circuit.from_layout(2, [Local1Q(H, 0), Controlled(X, 0, 1)], nodes=[0, 0])
    r = count_resources(c)
    assert (r.bell_pairs, r.ghz_sizes, r.measurements, r.conditioned_ops) == (0, (), 0, 0)
    assert r.expanded


def test_unexpanded_circuit_is_flagged():
    r = count_resources(build_qft_cp(3))
    assert r.bell_pairs == 0 and not r.expanded
    # one fan-out from q0 and one controlled phase from q1
    assert r.summary() == "unexpanded: 2 remote gates"


def test_report_equivalents():
    _, r = compile_dqft(5, strategy=Strategy.FANOUT)
    assert r.ghz_sizes == (5, 4, 3)
    assert r.bell_pairs_equiv == 1 + 4 + 3 + 2
    assert r.bell_pairs_equiv_k_per_ghz == 1 + 5 + 4 + 3
    assert r.summary() == "GHZ: [5,4,3], Bell: 1"
    assert r.resources_label() == "GHZ{5,4,3}+1 Bell"


def test_depth_examples():
    assert depth(Circuit.from_layout(2, [Local1Q(H, 0), Local1Q(H, 1)])) == 1
    assert depth(Circuit.from_layout(2, [Local1Q(H, 0), Controlled(X, 0, 1)])) == 2
    assert depth(Circuit.from_layout(2, [])) == 0


def test_barrier_orders_without_cost():
    c = Circuit.from_layout(2, [Local1Q(H, 0), Barrier(), Local1Q(H, 1)])
    assert depth(c) == 2


def test_conditioned_waits_for_measurement():
    c = Circuit.from_layout(2, [Local1Q(H, 0), Measure(0, 0), Conditioned(ParityCondition((0,)), X, 1)])
    assert depth(c) == 3


def test_ghz_weights_follow_mode():
    model = CostModel(ghz_oneshot=5)
    assert model.weight(expand_all(build_qft_cp(5), "fanout", "oneshot").circuit.gates[1]) == 5
    assert log_steps(2) == 1 and log_steps(5) == 3 and log_steps(8) == 3


@pytest.mark.parametrize("n", sorted(DQFT_DEPTHS))
def test_dqft_depth_regression(n):
    got = {which: dqft_depth(n, which) for which in MODES}
    assert got == DQFT_DEPTHS[n]
    assert got["oneshot"] <= got["tree"] <= got["bell"]


def test_depth_ordering_is_strict_at_eight():
    d = DQFT_DEPTHS[8]
    assert d["oneshot"] < d["tree"] < d["bell"]


@pytest.mark.parametrize("n", [4, 8])
def test_tree_depth_scales_better_than_bell_only(n):
    tree = dqft_depth(2 * n, "tree") / dqft_depth(n, "tree")
    bell = dqft_depth(2 * n, "bell") / dqft_depth(n, "bell")
    assert tree < bell


WEIGHTS = ("local_gate", "bell_prep", "ghz_oneshot", "ghz_tree", "measure_and_classical")


@settings(max_examples=40, deadline=None)
@given(
    base=st.fixed_dictionaries({k: st.floats(0, 4) for k in WEIGHTS}),
    key=st.sampled_from(WEIGHTS),
    bump=st.floats(0, 3),
    n=st.integers(2, 6),
    which=st.sampled_from(sorted(MODES)),
)
def test_depth_monotone_in_weights(base, key, bump, n, which):
    strategy, mode = MODES[which]
    c = expand_all(build_qft_cp(n), strategy, mode).circuit
    lo = CostModel().with_overrides(base)
    hi = CostModel().with_overrides({**base, key: base[key] + bump})
    assert depth(c, hi) >= depth(c, lo) - 1e-12


def test_cost_model_rejects_bad_weights():
    with pytest.raises(ValueError):
        CostModel(bell_prep=-1)
    with pytest.raises(ValueError):
        CostModel(ghz_tree=lambda k: 10 - k)
    with pytest.raises(ValueError):
        CostModel().with_overrides({"teleport": 1})


def test_compare_table_dqft():
    rows = compare_strategies("dqft", range(4, 9))
    bell = [r.report.bell_pairs for r in rows if r.strategy == "bell-only"]
    assert bell == [6, 10, 15, 21, 28]
    labels = {(r.n, r.strategy, r.ghz_mode): r.report.resources_label() for r in rows}
    assert labels[(4, "fanout", "oneshot")] == "GHZ{4,3}+1 Bell"
    assert labels[(4, "fanout", "tree")] == "GHZ{4,3}+1 Bell"
    assert labels[(4, "bell-only", "none")] == "6 Bell"
    text = render_table(rows)
    assert "GHZ{4,3}+1 Bell" in text
    assert text.splitlines()[0].split()[: len(CSV_COLUMNS)] == list(CSV_COLUMNS)


def test_compare_star_graph():
    rows = compare_strategies("qaoa", [4])
    by = {r.strategy + "/" + r.ghz_mode: r.report for r in rows}
    assert by["bell-only/none"].bell_pairs == 3
    # one fan-out of width 3 means a single 4-party GHZ state
    assert by["fanout/oneshot"].ghz_sizes == (4,) and by["fanout/oneshot"].bell_pairs == 0


def test_compare_pauli_family():
    rows = compare_strategies("pauli_exp", [3])
    by = {r.strategy + "/" + r.ghz_mode: r.report for r in rows}
    # compute and uncompute stages each share the ancilla with three remote qubits
    assert by["fanout/tree"].ghz_sizes == (4, 4)
    assert by["bell-only/none"].bell_pairs == 6


def test_csv_schema():
    rows = compare_strategies("dqft", [4])
    text = render_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert parsed[1] == ["dqft", "4", "bell-only", "none", "6", "", "24", "12"]
    assert parsed[3][:6] == ["dqft", "4", "fanout", "oneshot", "1", "4;3"]


def test_compare_rejects_unknown_family():
    with pytest.raises(ValueError):
        compare_strategies("grover", [3])
