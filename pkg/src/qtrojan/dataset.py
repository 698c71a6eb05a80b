"""Graph corpus, clean/Trojan circuit pairs and unitary feature tensors.

On-disk layout of a built dataset::

    <root>/<config>/clean/<circuit_id>.qasm
    <root>/<config>/trojan/<circuit_id>.qasm
    <root>/<config>/manifest.json
    <root>/<config>/features.bin

``features.bin`` is ``b"QTFEAT01"``, a little-endian u32 example count, then per
example a u32 id length, the UTF-8 id and 32*32*2 little-endian float32 values
(row-major, channel-last; channel 0 real, channel 1 imaginary).
"""
from __future__ import annotations

import hashlib
import itertools
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .circuit import Circuit, emit_qasm
from .qaoa import Graph, QaoaResult, build_qaoa_circuit, expectation, optimize
from .sim import evolve
from .transpile import get_backend, transpile
from .trojan import TrojanSpec, insert_trojan

FEATURE_SIZE = 32
FEATURE_SHAPE = (FEATURE_SIZE, FEATURE_SIZE, 2)
FEATURE_MAGIC = b"QTFEAT01"
TROJAN_FREE, TROJAN_INSERTED = 0, 1


# --------------------------------------------------------------------------
# Graph corpus


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def graphs_with_n(n: int) -> list[Graph]:
    """All labeled simple graphs on ``n`` nodes without isolated vertices.

    Ordered by the edge-set bitmask, bit k standing for the k-th pair of
    ``itertools.combinations(range(n), 2)``.
    """
    pairs = _pairs(n)
    out = []
    for mask in range(1, 2 ** len(pairs)):
        edges = [p for k, p in enumerate(pairs) if mask >> k & 1]
        if len({v for e in edges for v in e}) == n:
            out.append(Graph.from_pairs(n, edges))
    return out


def enumerate_graphs(sizes=(3, 4, 5)) -> list[Graph]:
    return [g for n in sizes for g in graphs_with_n(n)]


def edge_mask(g: Graph) -> int:
    index = {p: k for k, p in enumerate(_pairs(g.n))}
    return sum(1 << index[(i, j)] for i, j, _ in g.edges)


def graph_id(g: Graph) -> str:
    return f"n{g.n}_m{edge_mask(g):04x}"


def graph_seed(seed: int, circuit_id: str) -> int:
    """Stable per-graph seed: first 8 bytes of sha256("<seed>:<id>"), little-endian."""
    digest = hashlib.sha256(f"{seed}:{circuit_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def write_graph(g: Graph) -> str:
    """Edge-list text: ``n m`` then one ``i j w`` line per edge."""
    lines = [f"{g.n} {len(g.edges)}"] + [f"{i} {j} {w:g}" for i, j, w in g.edges]
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> Graph:
    rows = [r.split() for r in text.strip().splitlines() if r.strip()]
    n, m = map(int, rows[0])
    if len(rows) - 1 != m:
        raise ValueError(f"header promises {m} edges, found {len(rows) - 1}")
    return Graph(n, tuple((int(i), int(j), float(w)) for i, j, w in rows[1:]))


# --------------------------------------------------------------------------
# Experimental grid


@dataclass(frozen=True)
class DatasetConfig:
    backend: str
    gate_type: str
    count: int
    position: str
    seed: int = 0
    p: int = 1
    budget: int = 2500

    def __post_init__(self):
        cell = (self.position, self.gate_type.upper(), self.count)
        if self.backend not in ("ideal", "linear5") or cell not in GRID_CELLS:
            raise ValueError(f"({self.backend}, {cell}) is not one of the 12 grid configs")

    @property
    def name(self) -> str:
        return f"{self.backend}-{self.position}-{self.gate_type.lower()}-{self.count}"

    @property
    def trojan(self) -> TrojanSpec:
        return TrojanSpec(self.gate_type, self.count, self.position, "critical")


GRID_CELLS = (
    ("front", "X", 1),
    ("front", "H", 1),
    ("front", "RX", 1),
    ("front", "CX", 1),
    ("middle", "RX", 1),
    ("middle", "RX", 2),
)


def all_configs(seed: int = 0, budget: int = 2500) -> list[DatasetConfig]:
    return [
        DatasetConfig(b, gt, k, pos, seed=seed, budget=budget)
        for b in ("ideal", "linear5")
        for pos, gt, k in GRID_CELLS
    ]


def config_by_name(name: str, seed: int = 0, budget: int = 2500) -> DatasetConfig:
    for cfg in all_configs(seed, budget):
        if cfg.name == name:
            return cfg
    raise ValueError(f"unknown config {name!r}; choose from {[c.name for c in all_configs()]}")


# --------------------------------------------------------------------------
# Features


def unitary_features(c: Circuit) -> np.ndarray:
    """Re/Im channels of the measure-stripped circuit unitary, zero-padded to 32x32."""
    bare = c.without_measurements()
    dim = 2**bare.num_qubits
    if dim > FEATURE_SIZE:
        raise ValueError(f"{bare.num_qubits}-qubit unitary exceeds the {FEATURE_SIZE}x{FEATURE_SIZE} feature size")
    u = evolve(bare, np.eye(dim, dtype=complex))
    out = np.zeros(FEATURE_SHAPE, dtype=np.float32)
    out[:dim, :dim, 0] = u.real
    out[:dim, :dim, 1] = u.imag
    return out


def write_features(path, ids: list[str], features: np.ndarray) -> None:
    features = np.asarray(features, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<I", len(ids)))
        for cid, f in zip(ids, features):
            if f.shape != FEATURE_SHAPE:
                raise ValueError(f"feature for {cid} has shape {f.shape}")
            raw = cid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(f.tobytes(order="C"))


def read_features(path) -> tuple[list[str], np.ndarray]:
    data = Path(path).read_bytes()
    if data[:8] != FEATURE_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:8]!r}")
    (count,) = struct.unpack_from("<I", data, 8)
    pos, ids, feats = 12, [], []
    nbytes = 4 * int(np.prod(FEATURE_SHAPE))
    for _ in range(count):
        (k,) = struct.unpack_from("<I", data, pos)
        pos += 4
        ids.append(data[pos:pos + k].decode("utf-8"))
        pos += k
        feats.append(np.frombuffer(data, "<f4", nbytes // 4, pos).reshape(FEATURE_SHAPE))
        pos += nbytes
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return ids, np.array(feats, dtype=np.float32).reshape((count,) + FEATURE_SHAPE)


# --------------------------------------------------------------------------
# Dataset build


@dataclass
class LabeledExample:
    circuit_id: str
    qasm: str
    features: np.ndarray
    label: int
    ar: float = float("nan")

    @property
    def example_id(self) -> str:
        return f"{'trojan' if self.label else 'clean'}/{self.circuit_id}"


_CORPUS_CACHE: dict[tuple, dict[str, QaoaResult]] = {}


def optimize_corpus(graphs: list[Graph], seed: int = 0, p: int = 1, budget: int = 2500) -> dict[str, QaoaResult]:
    """Clean QAOA optimization per graph; memoized because every config shares it."""
    out = {}
    for g in graphs:
        cid = graph_id(g)
        key = (cid, seed, p, budget)
        if key not in _CORPUS_CACHE:
            _CORPUS_CACHE[key] = optimize(g, p, budget, graph_seed(seed, cid))
        out[cid] = _CORPUS_CACHE[key]
    return out


@dataclass
class Dataset:
    config: DatasetConfig
    examples: list[LabeledExample]

    @property
    def features(self) -> np.ndarray:
        return np.stack([e.features for e in self.examples])

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.examples], dtype=np.int64)

    def manifest(self) -> dict:
        return {
            "config": {**asdict(self.config), "name": self.config.name},
            "budget_unit": "cost-function evaluations",
            "feature_shape": list(FEATURE_SHAPE),
            "graph_seed_rule": "sha256(f'{seed}:{circuit_id}')[:8] little-endian",
            "counts": {
                "total": len(self.examples),
                "trojan_free": sum(e.label == TROJAN_FREE for e in self.examples),
                "trojan_inserted": sum(e.label == TROJAN_INSERTED for e in self.examples),
            },
            "examples": [
                {
                    "id": e.example_id,
                    "circuit_id": e.circuit_id,
                    "label": e.label,
                    "path": f"{e.example_id}.qasm",
                    "ar": e.ar,
                }
                for e in self.examples
            ],
        }

    def save(self, root) -> Path:
        base = Path(root) / self.config.name
        for sub in ("clean", "trojan"):
            (base / sub).mkdir(parents=True, exist_ok=True)
        for e in self.examples:
            (base / f"{e.example_id}.qasm").write_text(e.qasm)
        (base / "manifest.json").write_text(json.dumps(self.manifest(), indent=1, sort_keys=True) + "\n")
        write_features(base / "features.bin", [e.example_id for e in self.examples], self.features)
        return base


def load_dataset(path) -> Dataset:
    base = Path(path)
    manifest = json.loads((base / "manifest.json").read_text())
    cfg_fields = {k: v for k, v in manifest["config"].items() if k != "name"}
    ids, feats = read_features(base / "features.bin")
    by_id = dict(zip(ids, feats))
    examples = [
        LabeledExample(
            e["circuit_id"], (base / e["path"]).read_text(), by_id[e["id"]], e["label"], e["ar"]
        )
        for e in manifest["examples"]
    ]
    return Dataset(DatasetConfig(**cfg_fields), examples)


class BuildError(RuntimeError):
    pass


def build_dataset(cfg: DatasetConfig, graphs: list[Graph] | None = None) -> Dataset:
    """Compile clean and Trojan-inserted optimized ansatz pairs for every graph."""
    graphs = enumerate_graphs() if graphs is None else graphs
    backend = get_backend(cfg.backend)
    results = optimize_corpus(graphs, cfg.seed, cfg.p, cfg.budget)
    clean_examples, trojan_examples = [], []
    for g in graphs:
        cid = graph_id(g)
        res = results[cid]
        ansatz = build_qaoa_circuit(g, res.best_params, with_measure=True)
        pair = []
        for label, circuit in (
            (TROJAN_FREE, ansatz),
            (TROJAN_INSERTED, insert_trojan(ansatz, cfg.trojan)),
        ):
            compiled, layout = transpile(circuit.replace(name=cid), backend)
            ar = expectation(g, compiled.without_measurements(), layout.final) / res.e_opt
            pair.append(LabeledExample(cid, emit_qasm(compiled), unitary_features(compiled), label, ar))
        if pair[0].qasm == pair[1].qasm:
            raise BuildError(f"{cfg.name}: Trojan cancelled out during compilation of {cid}")
        clean_examples.append(pair[0])
        trojan_examples.append(pair[1])
    return Dataset(cfg, clean_examples + trojan_examples)


def split(examples: list, ratio: float = 0.8, seed: int = 0, labels=None) -> tuple[list, list]:
    """Seeded stratified split; each class contributes ``floor(ratio * size)`` to train."""
    if not examples:
        raise ValueError("cannot split an empty dataset")
    labels = [e.label for e in examples] if labels is None else list(labels)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in sorted(set(labels)):
        idx = np.array([i for i, y in enumerate(labels) if y == cls])
        idx = idx[rng.permutation(len(idx))]
        k = int(np.floor(ratio * len(idx) + 1e-9))
        train_idx += idx[:k].tolist()
        test_idx += idx[k:].tolist()
    train_idx = [train_idx[i] for i in rng.permutation(len(train_idx))]
    test_idx = [test_idx[i] for i in rng.permutation(len(test_idx))]
    return [examples[i] for i in train_idx], [examples[i] for i in test_idx]
