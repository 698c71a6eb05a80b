"""Gate-dependency DAGs, critical-path selection and Trojan insertion.

A qubit's *path* is its wire: the ordered gates touching it. Wires are ranked
by the longest dependency chain that starts at the wire's input, i.e. the
longest path through the DAG from that qubit's input boundary node. The
highest-ranked wire is the critical path; the lowest is the non-critical one.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .circuit import Circuit, CircuitError, Gate, GateKind
from .qaoa import Graph, QaoaParams, build_qaoa_circuit, optimize
from .transpile import IDEAL, Backend, transpile

K = GateKind
_DIRECTIVES = (K.MEASURE, K.BARRIER)

RX_TROJAN_ANGLE = 2.52
RZ_TROJAN_ANGLE = 6.91
TROJAN_GATES = ("X", "H", "RX", "RZ", "CX", "SWAP")
POSITIONS = ("front", "middle", "back")
PATH_KINDS = ("critical", "noncritical")


@dataclass(frozen=True)
class GateDag:
    """Wire-dependency DAG over the non-directive gates of a circuit.

    Node ``i`` is ``gates[i]`` of the source circuit; ``("in", q)`` and
    ``("out", q)`` are wire boundaries. Each edge carries the qubit whose wire
    it follows.
    """

    num_qubits: int
    gates: tuple[Gate, ...]
    wires: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[object, object, int], ...] = field(repr=False)

    def successors(self, node: int) -> list[int]:
        return sorted({dst for src, dst, _ in self.edges if src == node and isinstance(dst, int)})

    def longest_from(self) -> dict[int, int]:
        """Gate count of the longest chain starting at each gate node."""
        nxt: dict[int, set[int]] = {}
        for src, dst, _ in self.edges:
            if isinstance(src, int) and isinstance(dst, int):
                nxt.setdefault(src, set()).add(dst)
        depth: dict[int, int] = {}
        nodes = sorted({i for w in self.wires for i in w})
        for i in reversed(nodes):  # gate-list order is topological
            depth[i] = 1 + max((depth[s] for s in nxt.get(i, ())), default=0)
        return depth


@dataclass(frozen=True)
class QubitPath:
    qubit: int
    gates: tuple[int, ...]  # positions in the circuit's gate list
    depth: int  # longest DAG chain starting at this wire's input

    @property
    def length(self) -> int:
        return len(self.gates)


def to_dag(c: Circuit) -> GateDag:
    wires: list[list[int]] = [[] for _ in range(c.num_qubits)]
    for i, g in enumerate(c.gates):
        if g.kind in _DIRECTIVES:
            continue
        for q in g.qubits:
            wires[q].append(i)
    edges = []
    for q, w in enumerate(wires):
        chain = [("in", q), *w, ("out", q)]
        edges += [(a, b, q) for a, b in zip(chain, chain[1:])]
    return GateDag(c.num_qubits, c.gates, tuple(map(tuple, wires)), tuple(edges))


def qubit_paths(d: GateDag) -> list[QubitPath]:
    depth = d.longest_from()
    return [
        QubitPath(q, w, depth[w[0]] if w else 0)
        for q, w in enumerate(d.wires)
    ]


def critical_path(d: GateDag) -> QubitPath:
    paths = [p for p in qubit_paths(d) if p.gates]
    if not paths:
        raise ValueError("circuit has no gates")
    return max(paths, key=lambda p: (p.depth, -p.qubit))


def noncritical_path(d: GateDag) -> QubitPath:
    paths = [p for p in qubit_paths(d) if p.gates]
    if d.num_qubits < 2 or len(paths) < 1:
        raise ValueError("non-critical path needs a circuit with at least two qubits")
    return min(paths, key=lambda p: (p.depth, p.qubit))


@dataclass(frozen=True)
class TrojanSpec:
    gate_type: str
    count: int = 1
    position: str = "front"
    path_kind: str = "critical"
    angle: float | None = None

    def __post_init__(self):
        gt = self.gate_type.upper()
        object.__setattr__(self, "gate_type", gt)
        if gt not in TROJAN_GATES:
            raise ValueError(f"unknown Trojan gate {self.gate_type!r}")
        if self.count not in (1, 2):
            raise ValueError("count must be 1 or 2")
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}")
        if self.path_kind not in PATH_KINDS:
            raise ValueError(f"path_kind must be one of {PATH_KINDS}")
        if gt in ("RX", "RZ"):
            if self.angle is None:
                default = RX_TROJAN_ANGLE if gt == "RX" else RZ_TROJAN_ANGLE
                object.__setattr__(self, "angle", default)
        elif self.angle is not None:
            raise ValueError(f"{gt} Trojan takes no angle")

    @property
    def label(self) -> str:
        name = self.gate_type if self.angle is None else f"{self.gate_type}({self.angle:g})"
        return f"{name}x{self.count}@{self.position}/{self.path_kind}"

    def gate(self, q: int, partner: int | None) -> Gate:
        kind = K[self.gate_type]
        if kind.num_qubits == 2:
            if partner is None:
                raise CircuitError(f"{kind.name} Trojan needs a circuit with >= 2 qubits")
            return Gate(kind, (q, partner))
        return Gate(kind, (q,), self.angle)


def insertion_point(c: Circuit, spec: TrojanSpec) -> tuple[int, int]:
    """``(gate-list index, target qubit)`` where ``spec`` would insert."""
    d = to_dag(c)
    path = critical_path(d) if spec.path_kind == "critical" else noncritical_path(d)
    wire = path.gates
    if spec.position == "front":
        index = wire[0]
    elif spec.position == "back":
        index = wire[-1] + 1
    else:
        half = len(wire) // 2
        index = wire[half - 1] + 1 if half else wire[0]
    return index, path.qubit


def insert_trojan(c: Circuit, spec: TrojanSpec) -> Circuit:
    index, q = insertion_point(c, spec)
    partner = next((p for p in range(c.num_qubits) if p != q), None)
    g = spec.gate(q, partner)
    gates = c.gates[:index] + (g,) * spec.count + c.gates[index:]
    return c.replace(gates, name=f"{c.name}+trojan")


def trojan_ansatz(g: Graph, spec: TrojanSpec | None, backend: Backend):
    """Parameters -> compiled (optionally Trojan-inserted) QAOA circuit."""

    def ansatz(params: QaoaParams):
        c = build_qaoa_circuit(g, params)
        if spec is not None:
            c = insert_trojan(c, spec)
        compiled, layout = transpile(c, backend)
        return compiled, layout.final

    return ansatz


@dataclass(frozen=True)
class ArLoss:
    ar_clean: float
    ar_trojan: float
    loss_pct: float


def ar_loss(
    g: Graph,
    spec: TrojanSpec,
    backend: Backend = IDEAL,
    p: int = 1,
    budget: int = 2500,
    seed: int = 0,
) -> ArLoss:
    """Re-optimize a Trojan-inserted compiled ansatz and compare against clean."""
    clean = optimize(g, p, budget, seed)
    troj = optimize(g, p, budget, seed, ansatz=trojan_ansatz(g, spec, backend))
    loss = 100.0 * (clean.ar - troj.ar) / clean.ar
    return ArLoss(clean.ar, troj.ar, loss)


SWEEP_COLUMNS = (
    "gate_type", "count", "position", "path_kind", "backend", "ar_clean", "ar_trojan", "loss_pct",
)


def sweep_specs() -> list[TrojanSpec]:
    """X over every position/path pair, then every gate type at the front."""
    grid = [TrojanSpec("X", 1, pos, kind) for pos in POSITIONS for kind in PATH_KINDS]
    grid += [TrojanSpec(gt, 1, "front", "critical") for gt in TROJAN_GATES]
    return grid


def vulnerability_sweep(
    g: Graph, backend: Backend = IDEAL, budget: int = 2500, seed: int = 0, p: int = 1
) -> list[dict]:
    rows = []
    for spec in sweep_specs():
        res = ar_loss(g, spec, backend, p, budget, seed)
        rows.append(
            {
                "gate_type": spec.gate_type if spec.angle is None else f"{spec.gate_type}({spec.angle:g})",
                "count": spec.count,
                "position": spec.position,
                "path_kind": spec.path_kind,
                "backend": backend.name,
                "ar_clean": res.ar_clean,
                "ar_trojan": res.ar_trojan,
                "loss_pct": res.loss_pct,
            }
        )
    return rows


def rows_to_csv(rows: list[dict], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (format(v, ".10g") if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


# Five 4/5-node benchmark instances. The original selection is not recoverable,
# so these are fixed, commonly used small Max-Cut shapes.
BENCHMARK_GRAPHS: dict[str, Graph] = {
    "square": Graph.from_pairs(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
    "diamond": Graph.from_pairs(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]),
    "k4": Graph.from_pairs(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    "pentagon": Graph.from_pairs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
    "house": Graph.from_pairs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)]),
}

TRIANGLE = Graph.from_pairs(3, [(0, 1), (0, 2), (1, 2)])

BENCHMARK_COLUMNS = ("graph", "n", "m", "backend", "ar_clean", "ar_trojan", "loss_pct")


def benchmark_degradation(
    backend: Backend = IDEAL, budget: int = 2500, seed: int = 0, spec: TrojanSpec | None = None
) -> list[dict]:
    """AR before/after the front-of-critical-path X Trojan on each benchmark graph."""
    spec = spec or TrojanSpec("X", 1, "front", "critical")
    rows = []
    for name, g in BENCHMARK_GRAPHS.items():
        res = ar_loss(g, spec, backend, 1, budget, seed)
        rows.append({
            "graph": name, "n": g.n, "m": len(g.edges), "backend": backend.name,
            "ar_clean": res.ar_clean, "ar_trojan": res.ar_trojan, "loss_pct": res.loss_pct,
        })
    return rows
