"""Compile, count and verify distributed circuits built from Bell pairs and GHZ fan-outs."""

from .compilers import (
    ParityForm,
    PauliString,
    WeightedEdge,
    build_parity_gate,
    build_qft_cp,
    build_qft_cr,
    build_zz_term,
    compile_dqft,
    compile_pauli_exp,
    compile_qaoa_cost,
    group_fanouts,
)
from .ir import (
    Circuit,
    Locality,
    LocalityKind,
    deserialize,
    locality,
    serialize,
    validate,
)
from .protocols import (
    ExpansionResult,
    Strategy,
    expand_all,
    expand_dcu,
    expand_dfanout,
    ghz_prepare_tree,
    inline_ghz_trees,
)
from .resources import CostModel, ResourceReport, compare_strategies, count_resources, depth
from .sim import (
    Branch,
    StateVector,
    matrices_equal_upto_phase,
    pauli_exp_matrix,
    run_branches,
    states_equal_upto_phase,
    unitary_of,
)

__version__ = "0.1.0"
