import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtrojan.circuit import (
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    QasmSyntaxError,
    QubitRangeError,
    UnsupportedGateError,
    cx,
    emit_qasm,
    h,
    insert_gate_at,
    measure,
    parse_qasm,
    rx,
    x,
)
from qtrojan.qaoa import Graph, QaoaParams, build_qaoa_circuit
from conftest import random_circuit

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def test_parse_single_gate():
    c = parse_qasm(HEADER + "qreg q[1];\nh q[0];\n")
    assert c.num_qubits == 1
    assert c.gates == (h(0),)


def test_parse_rotation_angle():
    c = parse_qasm(HEADER + "qreg q[2];\nrx(2.52) q[1];\n")
    assert c.gates == (Gate(GateKind.RX, (1,), 2.52),)


def test_parse_negative_and_exponent_angles():
    c = parse_qasm(HEADER + "qreg q[1];\nrz(-1.5e-3) q[0];\nrx(+.25) q[0];")
    assert [g.param for g in c.gates] == [-1.5e-3, 0.25]


def test_unsupported_gate_is_its_own_error():
    with pytest.raises(UnsupportedGateError) as exc:
        parse_qasm(HEADER + "qreg q[2];\ncz q[0],q[1];\n")
    assert exc.value.name == "cz"
    assert exc.value.line == 4


def test_syntax_error_reports_line_and_column():
    with pytest.raises(QasmSyntaxError) as exc:
        parse_qasm(HEADER + "qreg q[2];\nh q[0]\nx q[1];\n")
    assert (exc.value.line, exc.value.column) == (5, 1)


def test_out_of_range_qubit():
    with pytest.raises(QubitRangeError):
        parse_qasm(HEADER + "qreg q[2];\nx q[2];\n")


def test_error_kinds_are_distinct():
    kinds = {QasmSyntaxError, UnsupportedGateError, QubitRangeError}
    assert len(kinds) == 3
    assert not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)


def test_header_required():
    with pytest.raises(QasmSyntaxError):
        parse_qasm("qreg q[1];\nh q[0];\n")


def test_comments_and_measure_barrier():
    text = HEADER + "qreg q[2];\ncreg c[2];\n// note\nh q[0]; // trailing\nbarrier q;\nmeasure q[0] -> c[1];\n"
    c = parse_qasm(text)
    assert c.gates[1] == Gate(GateKind.BARRIER, (0, 1))
    assert c.gates[2] == measure(0, 1)
    assert c.num_clbits == 2


def test_emit_empty_circuit_is_header_only():
    text = emit_qasm(Circuit(1))
    assert text.splitlines() == ["OPENQASM 2.0;", 'include "qelib1.inc";', "qreg q[1];"]


def test_emit_cx_line():
    lines = emit_qasm(Circuit(2, (cx(0, 1),))).splitlines()
    assert lines.count("cx q[0],q[1];") == 1
    assert sum(line.startswith("cx") for line in lines) == 1


def test_emit_uses_17_significant_digits():
    assert "rx(0.10000000000000001) q[0];" in emit_qasm(Circuit(1, (rx(0.1, 0),)))


def test_round_trip_triangle_qaoa():
    g = Graph.from_pairs(3, [(0, 1), (0, 2), (1, 2)])
    c = build_qaoa_circuit(g, QaoaParams((0.61,), (0.3,)), with_measure=True)
    back = parse_qasm(emit_qasm(c))
    assert back.gates == c.gates
    assert back.num_clbits == c.num_clbits


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(0, 30))
def test_round_trip_random(seed, n, depth):
    c = random_circuit(np.random.default_rng(seed), n, depth)
    text = emit_qasm(c)
    assert parse_qasm(text).gates == c.gates
    assert emit_qasm(parse_qasm(text)) == text


def test_insert_at_front():
    c = insert_gate_at(Circuit(1, (h(0),)), 0, x(0))
    assert c.gates == (x(0), h(0))


def test_insert_at_end():
    c = insert_gate_at(Circuit(1, (h(0),)), 1, x(0))
    assert c.gates == (h(0), x(0))


def test_insert_errors():
    c = Circuit(1, (h(0),))
    with pytest.raises(IndexError):
        insert_gate_at(c, 2, x(0))
    with pytest.raises(CircuitError):
        insert_gate_at(c, 0, x(1))


def test_gate_after_measure_rejected():
    with pytest.raises(CircuitError):
        Circuit(1, (measure(0, 0), x(0)), num_clbits=1)


def test_measure_needs_clbit_room():
    with pytest.raises(CircuitError):
        Circuit(2, (measure(0, 0), measure(1, 1)), num_clbits=1)


@pytest.mark.parametrize(
    "kind, qubits, param",
    [
        (GateKind.RX, (0,), None),
        (GateKind.H, (0,), 1.0),
        (GateKind.CX, (0,), None),
        (GateKind.CX, (1, 1), None),
        (GateKind.X, (0, 1), None),
    ],
)
def test_gate_invariants(kind, qubits, param):
    with pytest.raises(CircuitError):
        Gate(kind, qubits, param)
