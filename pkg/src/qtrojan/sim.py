"""Dense statevector and unitary simulation for small circuits.

Bit ordering: qubit 0 is the least significant bit of a basis index, so
``|q2 q1 q0>`` is index ``4*q2 + 2*q1 + q0``. Bitstrings are printed with the
most significant qubit on the left.

Two independent routes are kept on purpose: :func:`gate_unitary` builds full
matrices from Kronecker products, while :func:`evolve` applies each gate to
the state in place via reshapes and index permutations.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .circuit import Circuit, Gate, GateKind

MAX_QUBITS = 10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def single_qubit_matrix(g: Gate) -> np.ndarray:
    if g.kind is GateKind.H:
        return H
    if g.kind is GateKind.X:
        return X
    if g.kind is GateKind.SX:
        return SX
    if g.kind is GateKind.RX:
        return rx_matrix(g.param)
    if g.kind is GateKind.RZ:
        return rz_matrix(g.param)
    raise ValueError(f"{g.kind.name} is not a single-qubit unitary")


def _kron_embed(factors: dict[int, np.ndarray], n: int) -> np.ndarray:
    # kron order is most significant qubit first
    out = np.ones((1, 1), dtype=complex)
    for q in reversed(range(n)):
        out = np.kron(out, factors.get(q, I2))
    return out


def gate_unitary(g: Gate, n: int) -> np.ndarray:
    """Full ``2**n x 2**n`` matrix of ``g`` acting inside an n-qubit register."""
    if g.kind in (GateKind.MEASURE, GateKind.BARRIER):
        raise ValueError(f"{g.kind.name} has no unitary")
    if any(q >= n for q in g.qubits):
        raise ValueError(f"{g} does not fit in {n} qubits")
    if g.kind is GateKind.CX:
        c, t = g.qubits
        return _kron_embed({c: P0}, n) + _kron_embed({c: P1, t: X}, n)
    if g.kind is GateKind.SWAP:
        a, b = g.qubits
        # SWAP = (I + XX + YY + ZZ) / 2
        Y = np.array([[0, -1j], [1j, 0]])
        terms = [{}, {a: X, b: X}, {a: Y, b: Y}, {a: Z, b: Z}]
        return sum(_kron_embed(t, n) for t in terms) / 2
    return _kron_embed({g.qubits[0]: single_qubit_matrix(g)}, n)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Product of gate matrices, last gate leftmost. Barriers are skipped."""
    dim = 2 ** c.num_qubits
    u = np.eye(dim, dtype=complex)
    for g in c.gates:
        if g.kind is GateKind.BARRIER:
            continue
        if g.kind is GateKind.MEASURE:
            raise ValueError("circuit contains MEASURE; strip measurements first")
        u = gate_unitary(g, c.num_qubits) @ u
    return u


# --------------------------------------------------------------------------
# In-place kernels


@lru_cache(maxsize=None)
def _bit(q: int, n: int) -> np.ndarray:
    return (np.arange(2**n) >> q) & 1


@lru_cache(maxsize=None)
def _permutation(kind: GateKind, a: int, b: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    if kind is GateKind.CX:
        return np.where((idx >> a) & 1, idx ^ (1 << b), idx)
    ba, bb = (idx >> a) & 1, (idx >> b) & 1
    return idx ^ ((ba ^ bb) * ((1 << a) | (1 << b)))


def apply_gate(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply ``g`` along axis 0 of ``psi`` (shape ``(2**n,)`` or ``(2**n, k)``)."""
    kind = g.kind
    if kind in (GateKind.CX, GateKind.SWAP):
        return psi[_permutation(kind, g.qubits[0], g.qubits[1], n)]
    q = g.qubits[0]
    if kind is GateKind.RZ:
        phase = np.exp(-0.5j * g.param) * np.exp(1j * g.param * _bit(q, n))
        return phase.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi
    if kind is GateKind.X:
        return psi[np.arange(2**n) ^ (1 << q)]
    m = single_qubit_matrix(g)
    t = psi.reshape((2 ** (n - 1 - q), 2, -1))
    t0, t1 = t[:, 0, :], t[:, 1, :]
    out = np.empty_like(t)
    out[:, 0, :] = m[0, 0] * t0 + m[0, 1] * t1
    out[:, 1, :] = m[1, 0] * t0 + m[1, 1] * t1
    return out.reshape(psi.shape)


def evolve(c: Circuit, state: np.ndarray) -> np.ndarray:
    """Evolve ``state`` through ``c``; MEASURE and BARRIER are skipped."""
    n = c.num_qubits
    psi = np.asarray(state, dtype=complex)
    if psi.shape[0] != 2**n:
        raise ValueError(f"state has dimension {psi.shape[0]}, circuit needs {2**n}")
    for g in c.gates:
        if g.kind in (GateKind.MEASURE, GateKind.BARRIER):
            continue
        psi = apply_gate(psi, g, n)
    return psi


def zero_state(n: int) -> np.ndarray:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"unsupported qubit count {n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def probabilities(state: np.ndarray) -> np.ndarray:
    p = np.abs(state) ** 2
    return p / p.sum()


def sample_counts(state: np.ndarray, shots: int, seed: int) -> dict[str, int]:
    """Multinomial measurement of every qubit; keys are MSB-left bitstrings."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = int(np.log2(len(state)))
    counts = np.random.default_rng(seed).multinomial(shots, probabilities(state))
    return {format(i, f"0{n}b"): int(k) for i, k in enumerate(counts) if k}


def is_unitary(u: np.ndarray, atol: float = 1e-9) -> bool:
    return np.allclose(u @ u.conj().T, np.eye(len(u)), rtol=0, atol=atol)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    """True when ``a = exp(i phi) b`` for some phase, elementwise within ``atol``."""
    if a.shape != b.shape:
        return False
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < atol:
        return np.allclose(a, b, rtol=0, atol=atol)
    phase = a[k] / b[k]
    if abs(abs(phase) - 1) > 1e-6:
        return False
    return np.allclose(a, phase * b, rtol=0, atol=atol)
