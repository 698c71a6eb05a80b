# Build a small circuit, write it out as OpenQASM 2.0, read it back and simulate it.
import numpy as np

from qtrojan.circuit import Circuit, cx, emit_qasm, h, measure, parse_qasm
from qtrojan.sim import circuit_unitary, evolve, sample_counts, zero_state

# a Bell pair on qubits 0 and 1, measured into two classical bits
bell = Circuit(2, (h(0), cx(0, 1), measure(0, 0), measure(1, 1)), num_clbits=2, name="bell")
text = emit_qasm(bell)
print(text)

again = parse_qasm(text)
print("round trip ok:", again.gates == bell.gates)

# qubit 0 is the least significant bit, so |01> is index 1
psi = evolve(bell, zero_state(2))
print("amplitudes:", np.round(psi, 4))
print("counts:", sample_counts(psi, shots=1000, seed=7))

# the full matrix is available too (measurements have to be dropped first)
u = circuit_unitary(bell.without_measurements())
print("U U^dagger = I:", np.allclose(u @ u.conj().T, np.eye(4)))
