"""Toy compiler with two targets.

``ideal`` keeps the full gate set and only runs a peephole cancellation pass.
``linear5`` mimics a 5-qubit device with a line coupling map and the native
basis {RZ, SX, X, CX}: circuits are padded to 5 qubits, routed with greedy
shortest-path SWAPs from a trivial initial layout, rewritten into the basis
and then peephole-optimized.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .circuit import Circuit, Gate, GateKind, cx, rz, sx

K = GateKind


@dataclass(frozen=True)
class Backend:
    name: str
    basis: frozenset[GateKind]
    coupling: tuple[tuple[int, int], ...] | None = None
    num_qubits: int | None = None

    def neighbors(self, p: int) -> list[int]:
        out = set()
        for a, b in self.coupling or ():
            if a == p:
                out.add(b)
            elif b == p:
                out.add(a)
        return sorted(out)

    def adjacent(self, a: int, b: int) -> bool:
        return self.coupling is None or (min(a, b), max(a, b)) in self.coupling


IDEAL = Backend("ideal", frozenset({K.H, K.X, K.SX, K.RX, K.RZ, K.CX, K.SWAP}))
LINEAR5 = Backend(
    "linear5",
    frozenset({K.RZ, K.SX, K.X, K.CX}),
    coupling=((0, 1), (1, 2), (2, 3), (3, 4)),
    num_qubits=5,
)
BACKENDS = {b.name: b for b in (IDEAL, LINEAR5)}


def get_backend(name: str) -> Backend:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None


@dataclass(frozen=True)
class LayoutMap:
    """Logical-to-physical assignment before and after routing.

    ``final[v]`` is the physical qubit holding virtual qubit ``v`` at the end of
    the circuit. Virtual qubits at or above ``num_logical`` are idle padding.
    """

    initial: tuple[int, ...]
    final: tuple[int, ...]
    num_logical: int

    def permutation_matrix(self):
        """Matrix P with ``P |x>`` moving bit ``v`` of x to bit ``final[v]``."""
        import numpy as np

        n = len(self.final)
        dim = 2**n
        perm = np.zeros((dim, dim))
        for i in range(dim):
            j = 0
            for v in range(n):
                if (i >> v) & 1:
                    j |= 1 << self.final[v]
            perm[j, i] = 1.0
        return perm


class TranspileError(ValueError):
    pass


def _shortest_path(b: Backend, src: int, dst: int) -> list[int]:
    # BFS visiting lower-index neighbours first gives the lowest-index tie-break.
    prev = {src: None}
    queue = deque([src])
    while queue:
        p = queue.popleft()
        if p == dst:
            break
        for nb in b.neighbors(p):
            if nb not in prev:
                prev[nb] = p
                queue.append(nb)
    if dst not in prev:
        raise TranspileError(f"physical qubits {src} and {dst} are disconnected")
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def _route(c: Circuit, b: Backend) -> tuple[list[Gate], LayoutMap]:
    nphys = b.num_qubits
    l2p = list(range(nphys))
    p2l = list(range(nphys))
    out: list[Gate] = []

    def move(pa: int, pb: int) -> None:
        # walk the first operand along the path until it neighbours the second
        path = _shortest_path(b, pa, pb)
        for cur, nxt in zip(path[:-2], path[1:-1]):
            out.append(Gate(K.SWAP, (cur, nxt)))
            va, vb = p2l[cur], p2l[nxt]
            p2l[cur], p2l[nxt] = vb, va
            l2p[va], l2p[vb] = nxt, cur

    for g in c.gates:
        if g.kind in (K.CX, K.SWAP) and not b.adjacent(l2p[g.qubits[0]], l2p[g.qubits[1]]):
            move(l2p[g.qubits[0]], l2p[g.qubits[1]])
        phys = tuple(l2p[q] for q in g.qubits)
        out.append(Gate(g.kind, phys, g.param, g.clbit))
    return out, LayoutMap(tuple(range(nphys)), tuple(l2p), c.num_qubits)


_HALF_PI = math.pi / 2


def _to_basis(g: Gate) -> list[Gate]:
    k = g.kind
    if k is K.H:
        q = g.qubits[0]
        return [rz(_HALF_PI, q), sx(q), rz(_HALF_PI, q)]
    if k is K.RX:
        q = g.qubits[0]
        return [*_to_basis(Gate(K.H, (q,))), rz(g.param, q), *_to_basis(Gate(K.H, (q,)))]
    if k is K.SWAP:
        a, b = g.qubits
        return [cx(a, b), cx(b, a), cx(a, b)]
    return [g]


_SELF_INVERSE = {K.X, K.H, K.CX}


def cancel_adjacent(gates: list[Gate]) -> list[Gate]:
    """One left-to-right peephole pass over wire-adjacent gate pairs.

    X.X, H.H and CX.CX (same control/target) and SWAP.SWAP cancel; consecutive
    RZ (or RX) rotations on one qubit merge into a single rotation.
    """
    slots: list[Gate | None] = []
    wires: dict[int, list[int]] = {}

    for g in gates:
        tops = {wires[q][-1] if wires.get(q) else None for q in g.qubits}
        prev_i = tops.pop() if len(tops) == 1 else None
        prev = slots[prev_i] if prev_i is not None else None
        if prev is not None and prev.qubits == g.qubits or (
            prev is not None and g.kind is K.SWAP and set(prev.qubits) == set(g.qubits)
        ):
            if prev.kind is g.kind and (g.kind in _SELF_INVERSE or g.kind is K.SWAP):
                slots[prev_i] = None
                for q in g.qubits:
                    wires[q].pop()
                continue
            if prev.kind is g.kind and g.kind in (K.RZ, K.RX):
                slots[prev_i] = Gate(g.kind, g.qubits, prev.param + g.param)
                continue
        slots.append(g)
        for q in g.qubits:
            wires.setdefault(q, []).append(len(slots) - 1)
    return [g for g in slots if g is not None]


def transpile(c: Circuit, b: Backend = IDEAL) -> tuple[Circuit, LayoutMap]:
    """Compile ``c`` for backend ``b``; returns the circuit and its layout."""
    if b.coupling is None:
        gates = cancel_adjacent(list(c.gates))
        ident = tuple(range(c.num_qubits))
        return c.replace(gates), LayoutMap(ident, ident, c.num_qubits)

    if c.num_qubits > b.num_qubits:
        raise TranspileError(f"{c.num_qubits} qubits do not fit on {b.name} ({b.num_qubits})")
    padded = c.replace(num_qubits=b.num_qubits)
    routed, layout = _route(padded, b)
    layout = LayoutMap(layout.initial, layout.final, c.num_qubits)
    lowered = [h for g in routed for h in _to_basis(g)]
    gates = cancel_adjacent(lowered)
    return padded.replace(gates), layout
