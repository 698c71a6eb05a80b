import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtrojan.circuit import Circuit, Gate, GateKind, cx, h, measure, rx, rz, swap, x
from qtrojan.sim import circuit_unitary, equal_up_to_phase, gate_unitary
from qtrojan.transpile import (
    IDEAL,
    LINEAR5,
    TranspileError,
    cancel_adjacent,
    get_backend,
    transpile,
)
from conftest import random_circuit

K = GateKind


def padded(u: np.ndarray, width: int) -> np.ndarray:
    n = int(math.log2(u.shape[0]))
    return np.kron(np.eye(2 ** (width - n)), u)


def routed_matches(c: Circuit) -> bool:
    out, layout = transpile(c, LINEAR5)
    expected = layout.permutation_matrix() @ padded(circuit_unitary(c), 5)
    return equal_up_to_phase(circuit_unitary(out), expected, atol=1e-9)


def test_backend_definitions():
    assert IDEAL.coupling is None
    assert LINEAR5.basis == {K.RZ, K.SX, K.X, K.CX}
    assert set(LINEAR5.coupling) == {(0, 1), (1, 2), (2, 3), (3, 4)}
    assert LINEAR5.num_qubits == 5
    assert get_backend("linear5") is LINEAR5
    with pytest.raises(ValueError):
        get_backend("manila")


def test_h_passes_through_ideal():
    out, _ = transpile(Circuit(1, (h(0),)), IDEAL)
    assert out.gates == (h(0),)


def test_h_on_linear5_decomposes():
    out, _ = transpile(Circuit(1, (h(0),)), LINEAR5)
    assert out.gates == (rz(math.pi / 2, 0), Gate(K.SX, (0,)), rz(math.pi / 2, 0))
    by_hand = (
        gate_unitary(rz(math.pi / 2, 0), 1)
        @ gate_unitary(Gate(K.SX, (0,)), 1)
        @ gate_unitary(rz(math.pi / 2, 0), 1)
    )
    hmat = gate_unitary(h(0), 1)
    assert equal_up_to_phase(by_hand, hmat)
    # the leftover phase is exp(-i pi/4)
    assert np.allclose(by_hand, np.exp(-1j * math.pi / 4) * hmat, atol=1e-12)


def test_distant_cx_gets_routed():
    c = Circuit(3, (cx(0, 2),))
    out, layout = transpile(c, LINEAR5)
    assert out.num_qubits == 5
    assert out.count_ops()["cx"] >= 4  # one swap (3 cx) plus the original
    assert layout.final[:3] == (1, 0, 2)
    assert routed_matches(c)


def test_output_stays_in_basis_on_coupled_pairs(rng):
    for _ in range(20):
        out, _ = transpile(random_circuit(rng, 5, 30), LINEAR5)
        for g in out.gates:
            assert g.kind in LINEAR5.basis
            if g.kind == K.CX:
                assert LINEAR5.adjacent(*g.qubits)


def test_too_many_qubits():
    with pytest.raises(TranspileError):
        transpile(Circuit(6, (h(5),)), LINEAR5)


def test_measure_remapped_through_final_layout():
    c = Circuit(3, (cx(0, 2), measure(0, 0), measure(2, 2)), num_clbits=3)
    out, layout = transpile(c, LINEAR5)
    ms = [g for g in out.gates if g.kind == K.MEASURE]
    assert ms == [measure(layout.final[0], 0), measure(layout.final[2], 2)]


def test_deterministic(rng):
    c = random_circuit(rng, 4, 40)
    assert transpile(c, LINEAR5) == transpile(c, LINEAR5)


@pytest.mark.parametrize(
    "gates, expected",
    [
        ([x(0), x(0)], []),
        ([h(1), h(1)], []),
        ([cx(0, 1), cx(0, 1)], []),
        ([cx(0, 1), cx(1, 0)], [cx(0, 1), cx(1, 0)]),
        ([rz(0.25, 0), rz(0.5, 0)], [rz(0.75, 0)]),
        ([rx(0.25, 0), rx(0.5, 0)], [rx(0.75, 0)]),
        ([x(0), h(1), x(0)], [h(1)]),
        ([x(0), cx(0, 1), x(0)], [x(0), cx(0, 1), x(0)]),
        ([swap(0, 1), swap(1, 0)], []),
    ],
)
def test_cancellation_rules(gates, expected):
    assert cancel_adjacent(gates) == expected


def test_cancellation_is_single_pass():
    # after h.h cancels, the x pair becomes adjacent but is not revisited
    gates = [x(0), h(0), h(0), x(0)]
    out = cancel_adjacent(gates)
    assert len(out) in (0, 2)
    assert equal_up_to_phase(
        circuit_unitary(Circuit(1, tuple(out))), circuit_unitary(Circuit(1, tuple(gates)))
    )


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(0, 25))
def test_ideal_equivalence(seed, n, depth):
    c = random_circuit(np.random.default_rng(seed), n, depth)
    out, layout = transpile(c, IDEAL)
    assert layout.final == tuple(range(n))
    assert equal_up_to_phase(circuit_unitary(out), circuit_unitary(c), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(0, 25))
def test_linear5_equivalence(seed, n, depth):
    assert routed_matches(random_circuit(np.random.default_rng(seed), n, depth))
