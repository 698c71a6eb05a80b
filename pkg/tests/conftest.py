import numpy as np
import pytest

from qtrojan.circuit import Circuit, Gate, GateKind

K = GateKind
UNITARY_KINDS = (K.H, K.X, K.SX, K.RX, K.RZ, K.CX, K.SWAP)

_ACCEPTANCE_LINES: list[str] = []


def random_circuit(rng: np.random.Generator, n: int, depth: int, kinds=UNITARY_KINDS) -> Circuit:
    kinds = [k for k in kinds if n >= 2 or k.num_qubits == 1]
    gates = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        qubits = tuple(int(q) for q in rng.choice(n, size=kind.num_qubits, replace=False))
        param = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if kind.parametric else None
        gates.append(Gate(kind, qubits, param))
    return Circuit(n, tuple(gates))


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    """Record a one-line acceptance verdict, echoed in the terminal summary."""

    def _report(criterion: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
