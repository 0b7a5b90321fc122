"""Batch command line: build, expand, verify, count, compare.

Exit codes: 0 success, 1 verification failure, 2 usage, parse or capacity error.
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compilers import (
    ParityForm,
    PauliString,
    WeightedEdge,
    build_parity_gate,
    build_qft_cp,
    compile_pauli_exp,
    compile_qaoa_cost,
)
from .ir import Circuit, CircuitFormatError, GhzMode, deserialize, serialize
from .protocols import ProtocolError, Strategy, expand_all
from .resources import CostModel, compare_strategies, count_resources, depth, render_csv, render_table
from .sim import (
    DEFAULT_BRANCH_CAP,
    SimulationError,
    StateVector,
    peak_live_qubits,
    run_branches,
    subsystem_fidelity,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_MAX_LIVE_QUBITS = 20


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parameter parsing
# ---------------------------------------------------------------------------


def parse_edges(text: str) -> list[WeightedEdge]:
    """``"0-1:0.3,0-2:0.5"`` -> edges (p, q, theta)."""
    edges = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            pair, theta = item.split(":")
            p, q = pair.split("-")
            edges.append(WeightedEdge(int(p), int(q), float(theta)))
        except ValueError:
            raise UsageError(f"malformed edge {item!r}; expected p-q:theta") from None
    if not edges:
        raise UsageError("no edges given")
    return edges


def parse_range(text: str) -> list[int]:
    """``"4..8"`` (inclusive) or ``"4,6,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"malformed range {text!r}; expected a..b or a,b,c") from None


def parse_nodes(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed node list {text!r}") from None


def parse_cost(items: list[str] | None) -> CostModel:
    overrides = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"malformed cost override {item!r}; expected key=value")
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"cost override {item!r} is not numeric") from None
    try:
        return CostModel().with_overrides(overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def gate_summary(c: Circuit) -> str:
    kinds = Counter(type(g).__name__ for g in c.gates)
    detail = ", ".join(f"{v} {k}" for k, v in sorted(kinds.items()))
    return f"{c.name or 'circuit'}: {c.num_qubits} qubits, {len(c.gates)} gates ({detail})"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_build(
    family: str,
    *,
    n: int | None = None,
    edges: str | None = None,
    pauli: str | None = None,
    theta: float = 0.0,
    form: str = "fanout",
    nodes: str | None = None,
    ancilla_node: int | None = None,
) -> Circuit:
    node_list = parse_nodes(nodes)
    try:
        if family == "qft":
            if n is None:
                raise UsageError("qft needs --n")
            return build_qft_cp(n, node_list)
        if family == "qaoa":
            if edges is None:
                raise UsageError("qaoa needs --edges")
            edge_list = parse_edges(edges)
            size = n if n is not None else max(max(e.p, e.q) for e in edge_list) + 1
            return compile_qaoa_cost(edge_list, size, node_list)
        if family == "pauli-exp":
            if pauli is None:
                raise UsageError("pauli-exp needs --pauli")
            return compile_pauli_exp(PauliString(pauli, theta), node_list, ancilla_node)
        if family == "parity":
            if n is None:
                raise UsageError("parity needs --n")
            return build_parity_gate(list(range(n)), n, ParityForm(form), node_list)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown family {family!r}")


def cmd_expand(c: Circuit, strategy: str, ghz_mode: str) -> tuple[Circuit, str]:
    result = expand_all(c, Strategy(strategy), GhzMode(ghz_mode))
    if not result.new_comm_qubits:
        return result.circuit, "no remote gates"
    return result.circuit, count_resources(result.circuit).summary()


@dataclass
class VerifyReport:
    passed: bool
    worst_infidelity: float
    failing_branches: int
    total_branches: int
    text: str


def cmd_verify(
    original: Circuit,
    expanded: Circuit,
    *,
    tol: float = 1e-9,
    seed: int = 0,
    num_states: int = 10,
    branch_cap: int = DEFAULT_BRANCH_CAP,
    max_live_qubits: int = DEFAULT_MAX_LIVE_QUBITS,
) -> VerifyReport:
    """Compare every branch of ``expanded`` with ``original`` on seeded random inputs."""
    if not 0 < tol < 1:
        raise UsageError(f"tolerance must lie in (0, 1), got {tol}")
    qubits = sorted(original.qubit_ids)
    missing = set(qubits) - set(expanded.qubit_ids)
    if missing:
        raise UsageError(f"expanded circuit lacks original qubits {sorted(missing)}")
    for c in (original, expanded):
        peak = peak_live_qubits(c, qubits)
        if peak > max_live_qubits:
            raise SimulationError(
                f"desk-scale exceeded: {c.name or 'circuit'} needs {peak} live qubits (cap {max_live_qubits})"
            )
    rng = np.random.default_rng(seed)
    lines = [
        f"verify original={original.name or '-'} expanded={expanded.name or '-'} "
        f"states={num_states} seed={seed} tol={tol:.3e}"
    ]
    worst, failing, total = 0.0, 0, 0
    for k in range(num_states):
        psi = StateVector.random(qubits, rng)
        reference = run_branches(original, psi, max_branches=branch_cap)
        if len(reference) != 1:
            raise UsageError("original circuit must be measurement-free")
        target = reference[0].state
        state_worst, state_fail = 0.0, 0
        branches = run_branches(expanded, psi, max_branches=branch_cap)
        for b in branches:
            infid = max(0.0, 1.0 - subsystem_fidelity(b.state, target))
            state_worst = max(state_worst, infid)
            state_fail += infid >= tol
        worst = max(worst, state_worst)
        failing += state_fail
        total += len(branches)
        lines.append(
            f"state {k}: branches={len(branches)} failing={state_fail} worst_infidelity={state_worst:.3e}"
        )
    passed = failing == 0
    lines.append(
        f"result: {'PASS' if passed else 'FAIL'} worst_infidelity={worst:.3e} "
        f"failing_branches={failing}/{total}"
    )
    return VerifyReport(passed, worst, failing, total, "\n".join(lines) + "\n")


def cmd_count(c: Circuit, model: CostModel) -> str:
    r = count_resources(c)
    lines = [
        f"circuit: {c.name or '-'}",
        f"remote_gates: {r.remote_gates}",
        f"bell_pairs: {r.bell_pairs}",
        f"ghz_sizes: [{','.join(map(str, r.ghz_sizes))}]",
        f"measurements: {r.measurements}",
        f"conditioned_ops: {r.conditioned_ops}",
        f"bell_pairs_equiv: {r.bell_pairs_equiv} (k-1 per k-GHZ)",
        f"bell_pairs_equiv_k_per_ghz: {r.bell_pairs_equiv_k_per_ghz} (k per k-GHZ)",
        f"depth: {depth(c, model)}",
    ]
    return "\n".join(lines) + "\n"


_FAMILY_NAMES = {"qft": "dqft", "qaoa": "qaoa", "pauli-exp": "pauli_exp"}


def cmd_compare(
    family: str,
    n_range: str,
    model: CostModel,
    fmt: str = "text",
    *,
    edges: str | None = None,
    pauli: str | None = None,
    theta: float = 0.3,
) -> str:
    if family not in _FAMILY_NAMES:
        raise UsageError(f"unknown family {family!r}")
    try:
        rows = compare_strategies(
            _FAMILY_NAMES[family],
            parse_range(n_range),
            model,
            edges=parse_edges(edges) if edges else None,
            pauli=pauli,
            theta=theta,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return render_csv(rows) if fmt == "csv" else render_table(rows)


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------


def _read_circuit(path: str) -> Circuit:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return deserialize(text)
    except CircuitFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _note(message: str, output: str | None) -> None:
    # keep stdout clean when it carries the JSON circuit
    stream = sys.stderr if output in (None, "-") else sys.stdout
    print(message, file=stream)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfanout", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a circuit family as JSON")
    b.add_argument("family", choices=["qft", "qaoa", "pauli-exp", "parity"])
    b.add_argument("--n", type=int, help="qubit count (qft, parity; optional for qaoa)")
    b.add_argument("--edges", help="qaoa edges as p-q:theta,...")
    b.add_argument("--pauli", help="Pauli string over IXYZ")
    b.add_argument("--theta", type=float, default=0.0, help="Pauli exponent angle (default 0)")
    b.add_argument("--form", choices=[f.value for f in ParityForm], default="fanout")
    b.add_argument("--nodes", help="comma-separated node of each qubit (default: one per node)")
    b.add_argument("--ancilla-node", type=int, help="node of the pauli-exp ancilla (default: its own)")
    b.add_argument("--output", "-o", help="output path (default: stdout)")

    e = sub.add_parser("expand", help="expand remote gates into entanglement protocols")
    e.add_argument("input")
    e.add_argument("--strategy", choices=[s.value for s in Strategy], default="fanout")
    e.add_argument("--ghz-mode", choices=[m.value for m in GhzMode], default="oneshot")
    e.add_argument("--output", "-o", help="output path (default: stdout)")

    v = sub.add_parser("verify", help="check an expansion against its original on random inputs")
    v.add_argument("original")
    v.add_argument("expanded")
    v.add_argument("--tol", type=float, default=1e-9, help="max infidelity per branch (default 1e-9)")
    v.add_argument("--seed", type=int, default=0, help="RNG seed for input states (default 0)")
    v.add_argument("--num-states", type=int, default=10, help="random inputs (default 10)")
    v.add_argument("--branch-cap", type=int, default=DEFAULT_BRANCH_CAP, help="max branches (default 2^20)")
    v.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_LIVE_QUBITS, help="max live qubits (default 20)")
    v.add_argument("--report", help="also write the report to this path")

    c = sub.add_parser("count", help="count resources and weighted depth")
    c.add_argument("input")
    c.add_argument("--cost", action="append", metavar="KEY=VALUE", help="cost weight override")

    k = sub.add_parser("compare", help="compare expansion strategies over a size range")
    k.add_argument("family", choices=list(_FAMILY_NAMES))
    k.add_argument("--n", default="4..8", help="sizes as a..b or a,b,c (default 4..8)")
    k.add_argument("--edges", help="explicit qaoa edges (default: star graph)")
    k.add_argument("--pauli", help="explicit Pauli string (default: Z * n)")
    k.add_argument("--theta", type=float, default=0.3)
    k.add_argument("--cost", action="append", metavar="KEY=VALUE", help="cost weight override")
    k.add_argument("--format", choices=["text", "csv"], default="text")
    k.add_argument("--output", "-o", help="output path (default: stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "build":
            circuit = cmd_build(
                args.family,
                n=args.n,
                edges=args.edges,
                pauli=args.pauli,
                theta=args.theta,
                form=args.form,
                nodes=args.nodes,
                ancilla_node=args.ancilla_node,
            )
            _emit(serialize(circuit), args.output)
            _note(gate_summary(circuit), args.output)
            return EXIT_OK
        if args.command == "expand":
            circuit, summary = cmd_expand(_read_circuit(args.input), args.strategy, args.ghz_mode)
            _emit(serialize(circuit), args.output)
            _note(summary, args.output)
            return EXIT_OK
        if args.command == "verify":
            rep = cmd_verify(
                _read_circuit(args.original),
                _read_circuit(args.expanded),
                tol=args.tol,
                seed=args.seed,
                num_states=args.num_states,
                branch_cap=args.branch_cap,
                max_live_qubits=args.max_qubits,
            )
            sys.stdout.write(rep.text)
            if args.report:
                Path(args.report).write_text(rep.text)
            return EXIT_OK if rep.passed else EXIT_FAIL
        if args.command == "count":
            sys.stdout.write(cmd_count(_read_circuit(args.input), parse_cost(args.cost)))
            return EXIT_OK
        if args.command == "compare":
            text = cmd_compare(
                args.family,
                args.n,
                parse_cost(args.cost),
                args.format,
                edges=args.edges,
                pauli=args.pauli,
                theta=args.theta,
            )
            _emit(text, args.output)
            return EXIT_OK
    except (UsageError, ProtocolError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
