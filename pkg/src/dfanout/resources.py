"""Entanglement resource counts, weighted depth, and strategy comparison tables."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace

from .ir import (
    Barrier,
    BellPrep,
    Circuit,
    Conditioned,
    Gate,
    GhzMode,
    GhzPrep,
    Measure,
    gate_locality,
)
from .protocols import Strategy, expand_all

CSV_COLUMNS = ("family", "n", "strategy", "ghz_mode", "bell_pairs", "ghz_sizes", "depth", "measurements")


def log_steps(k: int) -> int:
    """Merge layers of a pairwise tree over ``k`` parties."""
    return math.ceil(math.log2(k)) if k > 1 else 0


@dataclass(frozen=True)
class CostModel:
    local_gate: float = 1
    bell_prep: float = 1
    ghz_oneshot: float = 1
    ghz_tree: Callable[[int], float] = log_steps
    measure_and_classical: float = 1

    def __post_init__(self):
        for name in ("local_gate", "bell_prep", "ghz_oneshot", "measure_and_classical"):
            if getattr(self, name) < 0:
                raise ValueError(f"cost weight {name} must be >= 0")
        prev = 0
        for k in range(2, 65):
            w = self.ghz_tree(k)
            if w < 0 or w < prev:
                raise ValueError("ghz_tree weight must be non-negative and monotone in k")
            prev = w

    def with_overrides(self, overrides: Mapping[str, float]) -> CostModel:
        """Apply ``key=value`` weights; ``ghz_tree=s`` means ``s * ceil(log2 k)``."""
        changes: dict[str, object] = {}
        for key, value in overrides.items():
            value = float(value)
            if key == "ghz_tree":
                changes[key] = _ScaledLog(value)
            elif key in {"local_gate", "bell_prep", "ghz_oneshot", "measure_and_classical"}:
                changes[key] = value
            else:
                raise ValueError(f"unknown cost weight {key!r}")
        return replace(self, **changes)

    def weight(self, g: Gate) -> float:
        if isinstance(g, BellPrep):
            return self.bell_prep
        if isinstance(g, GhzPrep):
            k = len(g.members)
            return self.ghz_tree(k) if g.mode is GhzMode.TREE else self.ghz_oneshot
        if isinstance(g, Measure):
            return self.measure_and_classical
        if isinstance(g, Barrier):
            return 0
        return self.local_gate


@dataclass(frozen=True)
class _ScaledLog:
    scale: float

    def __call__(self, k: int) -> float:
        return self.scale * log_steps(k)


@dataclass
class ResourceReport:
    bell_pairs: int = 0
    ghz_sizes: tuple[int, ...] = ()
    depth: float | None = None
    measurements: int = 0
    conditioned_ops: int = 0
    strategy: str = ""
    ghz_mode: str = ""
    bell_pairs_equiv: int = 0
    # same, if a k-party GHZ state were charged k pairs instead of k - 1
    bell_pairs_equiv_k_per_ghz: int = 0
    remote_gates: int = 0

    @property
    def expanded(self) -> bool:
        return self.remote_gates == 0

    def summary(self) -> str:
        if not self.expanded:
            return f"unexpanded: {self.remote_gates} remote gates"
        if self.ghz_sizes:
            return f"GHZ: [{','.join(map(str, self.ghz_sizes))}], Bell: {self.bell_pairs}"
        return f"Bell: {self.bell_pairs}"

    def resources_label(self) -> str:
        parts = []
        if self.ghz_sizes:
            parts.append("GHZ{" + ",".join(map(str, self.ghz_sizes)) + "}")
        if self.bell_pairs or not parts:
            parts.append(f"{self.bell_pairs} Bell")
        return "+".join(parts)


def count_resources(c: Circuit) -> ResourceReport:
    """Tally resource markers, measurements and corrections (depth left empty)."""
    remote = sum(gate_locality(c, g).is_remote for g in c.gates)
    bell = sum(isinstance(g, BellPrep) for g in c.gates)
    ghz = sorted((len(g.members) for g in c.gates if isinstance(g, GhzPrep)), reverse=True)
    return ResourceReport(
        bell_pairs=bell,
        ghz_sizes=tuple(ghz),
        measurements=sum(isinstance(g, Measure) for g in c.gates),
        conditioned_ops=sum(isinstance(g, Conditioned) for g in c.gates),
        bell_pairs_equiv=bell + sum(k - 1 for k in ghz),
        bell_pairs_equiv_k_per_ghz=bell + sum(ghz),
        remote_gates=remote,
    )


def depth(c: Circuit, model: CostModel | None = None) -> float:
    """Weighted ASAP depth.

    Each gate goes into the earliest layer after every layer that touched one
    of its qubits or wrote one of the classical bits it reads; a layer costs
    its heaviest gate. Barriers force later gates after everything before.
    """
    model = model or CostModel()
    qubit_layer: dict[int, int] = {}
    cbit_layer: dict[int, int] = {}
    layer_weight: list[float] = []
    floor = 0
    for g in c.gates:
        if isinstance(g, Barrier):
            floor = len(layer_weight)
            continue
        after = max([floor] + [qubit_layer.get(q, 0) for q in g.qubits])
        if isinstance(g, Conditioned):
            after = max([after] + [cbit_layer.get(b, 0) for b in g.cond.bits])
        layer = after + 1
        while len(layer_weight) < layer:
            layer_weight.append(0)
        layer_weight[layer - 1] = max(layer_weight[layer - 1], model.weight(g))
        for q in g.qubits:
            qubit_layer[q] = layer
        if isinstance(g, Measure):
            cbit_layer[g.out] = layer
    total = sum(layer_weight)
    return int(total) if float(total).is_integer() else total


def report(
    c: Circuit,
    model: CostModel | None = None,
    strategy: Strategy | str = "",
    ghz_mode: GhzMode | str = "",
) -> ResourceReport:
    r = count_resources(c)
    r.depth = depth(c, model)
    r.strategy = getattr(strategy, "value", strategy)
    r.ghz_mode = getattr(ghz_mode, "value", ghz_mode)
    return r


# ---------------------------------------------------------------------------
# Strategy comparison
# ---------------------------------------------------------------------------

STRATEGY_ROWS = (
    (Strategy.BELL_ONLY, None),
    (Strategy.FANOUT, GhzMode.TREE),
    (Strategy.FANOUT, GhzMode.ONESHOT),
)
FAMILIES = ("dqft", "qaoa", "pauli_exp")


@dataclass
class ComparisonRow:
    family: str
    n: int
    strategy: str
    ghz_mode: str
    report: ResourceReport = field(repr=False)

    def as_csv(self) -> list[str]:
        r = self.report
        return [
            self.family,
            str(self.n),
            self.strategy,
            self.ghz_mode,
            str(r.bell_pairs),
            ";".join(map(str, r.ghz_sizes)),
            str(r.depth),
            str(r.measurements),
        ]


def family_circuits(
    family: str,
    n_range: Iterable[int],
    *,
    edges: Sequence | None = None,
    pauli: str | None = None,
    theta: float = 0.3,
) -> list[tuple[int, Circuit]]:
    """The unexpanded circuits a comparison table is built from.

    ``qaoa`` without ``edges`` uses the star graph with ``n`` vertices centred
    on vertex 0; ``pauli_exp`` without ``pauli`` uses ``"Z" * n``. Explicit
    ``edges`` or ``pauli`` fix the size and yield a single circuit.
    """
    from .compilers import PauliString, WeightedEdge, build_qft_cp, compile_pauli_exp, compile_qaoa_cost

    if family == "dqft":
        return [(n, build_qft_cp(n)) for n in n_range]
    if family == "qaoa":
        if edges is not None:
            edges = list(edges)
            n = max(max(e.p, e.q) for e in edges) + 1
            return [(n, compile_qaoa_cost(edges, n))]
        return [
            (n, compile_qaoa_cost([WeightedEdge(0, q, theta) for q in range(1, n)], n))
            for n in n_range
        ]
    if family == "pauli_exp":
        if pauli is not None:
            return [(len(pauli), compile_pauli_exp(PauliString(pauli, theta)))]
        return [(n, compile_pauli_exp(PauliString("Z" * n, theta))) for n in n_range]
    raise ValueError(f"unknown circuit family {family!r}; expected one of {FAMILIES}")


def compare_strategies(
    family: str,
    n_range: Iterable[int],
    model: CostModel | None = None,
    **family_args,
) -> list[ComparisonRow]:
    """Resources and depth for Bell-only, tree-GHZ and one-shot-GHZ expansions."""
    model = model or CostModel()
    rows = []
    for n, circuit in family_circuits(family, n_range, **family_args):
        for strategy, mode in STRATEGY_ROWS:
            expanded = expand_all(circuit, strategy, mode or GhzMode.ONESHOT).circuit
            mode_label = mode.value if mode else "none"
            rows.append(
                ComparisonRow(family, n, strategy.value, mode_label, report(expanded, model, strategy, mode_label))
            )
    return rows


def render_csv(rows: Iterable[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(row.as_csv())
    return buf.getvalue()


def render_table(rows: Iterable[ComparisonRow]) -> str:
    header = list(CSV_COLUMNS) + ["resources", "bell_equiv(k-1)", "bell_equiv(k)"]
    body = [
        row.as_csv()
        + [
            row.report.resources_label(),
            str(row.report.bell_pairs_equiv),
            str(row.report.bell_pairs_equiv_k_per_ghz),
        ]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in [header] + body]
    return "\n".join(lines) + "\n"
