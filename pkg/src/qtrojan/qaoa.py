"""Max-Cut instances, the p-layer QAOA ansatz and its classical outer loop."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, Gate, cx, h, measure, rx, rz
from .sim import evolve, zero_state


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph; ``edges`` holds ``(i, j, w)`` with ``i < j``."""

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple(sorted((int(i), int(j), float(w)) for i, j, w in self.edges))
        object.__setattr__(self, "edges", edges)
        seen = set()
        degree = [0] * self.n
        for i, j, _ in edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < {self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            degree[i] += 1
            degree[j] += 1
        if min(degree, default=0) < 1:
            raise ValueError("every node needs at least one edge")

    @classmethod
    def from_pairs(cls, n: int, pairs: Sequence[tuple[int, int]]) -> "Graph":
        return cls(n, tuple((min(i, j), max(i, j), 1.0) for i, j in pairs))

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("need equal, non-zero numbers of gammas and betas")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "QaoaParams":
        v = [float(t) for t in v]
        p = len(v) // 2
        return cls(tuple(v[:p]), tuple(v[p:]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)


@dataclass(frozen=True)
class QaoaResult:
    best_params: QaoaParams
    best_expectation: float
    e_opt: float
    ar: float
    evaluations_used: int
    history: tuple[float, ...]


# --------------------------------------------------------------------------
# Classical side


def cut_value(g: Graph, z: str) -> float:
    """Weight of edges cut by bitstring ``z`` (most significant qubit first)."""
    if len(z) != g.n:
        raise ValueError(f"bitstring length {len(z)} != {g.n} nodes")
    bit = [z[g.n - 1 - i] for i in range(g.n)]
    return sum(w for i, j, w in g.edges if bit[i] != bit[j])


def brute_force_maxcut(g: Graph) -> tuple[float, str]:
    best, arg = -1.0, 0
    values = cut_values(g)
    for idx, v in enumerate(values):
        if v > best:
            best, arg = float(v), idx
    return best, format(arg, f"0{g.n}b")


def cut_values(g: Graph, final_layout: tuple[int, ...] | None = None, width: int | None = None):
    """Cut value of every basis state of a ``width``-qubit register.

    ``final_layout[i]`` names the register bit that carries graph node ``i``;
    by default node i sits on bit i.
    """
    return _cut_values(g, final_layout, width or g.n)


@lru_cache(maxsize=4096)
def _cut_values(g: Graph, final_layout, width: int) -> np.ndarray:
    idx = np.arange(2**width)
    where = final_layout or tuple(range(g.n))
    out = np.zeros(2**width)
    for i, j, w in g.edges:
        out += w * (((idx >> where[i]) ^ (idx >> where[j])) & 1)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# Quantum side


def build_qaoa_circuit(g: Graph, params: QaoaParams, with_measure: bool = False) -> Circuit:
    gates: list[Gate] = [h(q) for q in range(g.n)]
    for gamma, beta in zip(params.gammas, params.betas):
        for j, k, w in g.edges:
            gates += [cx(j, k), rz(-gamma * w, k), cx(j, k)]
        gates += [rx(2 * beta, q) for q in range(g.n)]
    if with_measure:
        gates += [measure(q, q) for q in range(g.n)]
    return Circuit(g.n, tuple(gates), g.n if with_measure else 0, name="qaoa")


def expectation(g: Graph, c: Circuit, final_layout: tuple[int, ...] | None = None) -> float:
    """Exact expected cut of the state ``c |0...0>``.

    For routed circuits pass the layout so each graph node is read from the
    physical qubit it ended on.
    """
    if final_layout is None and c.num_qubits != g.n:
        raise ValueError(f"circuit has {c.num_qubits} qubits, graph has {g.n} nodes")
    psi = evolve(c, zero_state(c.num_qubits))
    probs = psi.real**2 + psi.imag**2
    cuts = cut_values(g, None if final_layout is None else tuple(final_layout[: g.n]), c.num_qubits)
    return float(probs @ cuts)


# --------------------------------------------------------------------------
# Optimizer


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    budget: int,
    step: float = 0.25,
    xtol: float = 1e-6,
) -> tuple[np.ndarray, float, int, list[float]]:
    """Minimize ``f`` with at most ``budget`` evaluations.

    Returns ``(best_x, best_f, evaluations, trace)`` where the best point is the
    best ever evaluated, not merely the best simplex vertex.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    dim = len(x0)
    trace: list[float] = []
    best = [None, np.inf]

    class _Exhausted(Exception):
        pass

    def ev(x: np.ndarray) -> float:
        if len(trace) >= budget:
            raise _Exhausted
        fx = float(f(x))
        trace.append(fx)
        if fx < best[1]:
            best[0], best[1] = x.copy(), fx
        return fx

    try:
        simplex = [np.array(x0, dtype=float)]
        for i in range(dim):
            v = simplex[0].copy()
            v[i] += step
            simplex.append(v)
        fs = [ev(v) for v in simplex]
        while True:
            order = np.argsort(fs, kind="stable")
            simplex = [simplex[i] for i in order]
            fs = [fs[i] for i in order]
            if max(np.max(np.abs(v - simplex[0])) for v in simplex[1:]) < xtol:
                break
            centroid = np.mean(simplex[:-1], axis=0)
            xr = centroid + alpha * (centroid - simplex[-1])
            fr = ev(xr)
            if fr < fs[0]:
                xe = centroid + gamma * (xr - centroid)
                fe = ev(xe)
                simplex[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < fs[-2]:
                simplex[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-1]:
                xc = centroid + rho * (xr - centroid)
                fc = ev(xc)
                if fc <= fr:
                    simplex[-1], fs[-1] = xc, fc
                    continue
            else:
                xc = centroid + rho * (simplex[-1] - centroid)
                fc = ev(xc)
                if fc < fs[-1]:
                    simplex[-1], fs[-1] = xc, fc
                    continue
            for i in range(1, dim + 1):
                simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0])
                fs[i] = ev(simplex[i])
    except _Exhausted:
        pass
    return best[0], best[1], len(trace), trace


Ansatz = Callable[[QaoaParams], tuple[Circuit, "tuple[int, ...] | None"]]


def initial_point(p: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = np.concatenate([0.1 * np.arange(1, p + 1)] * 2)
    return base + rng.uniform(-0.05, 0.05, size=2 * p)


def optimize(
    g: Graph,
    p: int = 1,
    budget: int = 2500,
    seed: int = 0,
    ansatz: Ansatz | None = None,
) -> QaoaResult:
    """Maximize the expected cut over ``2p`` angles with Nelder-Mead.

    ``ansatz`` maps parameters to ``(circuit, final_layout)``; it defaults to
    the plain measure-free QAOA circuit. Any budget counts cost evaluations.
    """
    if ansatz is None:
        def ansatz(params):
            return build_qaoa_circuit(g, params), None

    def neg_expectation(v: np.ndarray) -> float:
        c, layout = ansatz(QaoaParams.from_vector(v))
        return -expectation(g, c, layout)

    x, fx, used, trace = nelder_mead(neg_expectation, initial_point(p, seed), budget)
    e_opt, _ = brute_force_maxcut(g)
    return QaoaResult(
        best_params=QaoaParams.from_vector(x),
        best_expectation=-fx,
        e_opt=e_opt,
        ar=-fx / e_opt,
        evaluations_used=used,
        history=tuple(-t for t in trace),
    )
