# Compile for the 5-qubit line 0-1-2-3-4 and check the result against the input.
import numpy as np

from qtrojan.circuit import Circuit, cx, emit_qasm, h
from qtrojan.sim import circuit_unitary, equal_up_to_phase
from qtrojan.transpile import IDEAL, LINEAR5, transpile

c = Circuit(3, (h(0), cx(0, 2)))

out, layout = transpile(c, IDEAL)
print("ideal backend keeps the gates:", out.gates == c.gates)

out, layout = transpile(c, LINEAR5)
print(emit_qasm(out))
print("virtual -> physical after routing:", layout.final)

# qubits 0 and 2 are not neighbours, so one SWAP (three CX) moved the control
# next to the target. The compiled unitary matches once the padding wires and
# the final permutation are accounted for.
padded = np.kron(np.eye(4), circuit_unitary(c))
print("equivalent:", equal_up_to_phase(circuit_unitary(out), layout.permutation_matrix() @ padded))
