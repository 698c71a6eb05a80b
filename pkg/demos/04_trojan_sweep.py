# Where does an inserted gate hurt QAOA most? Sweep positions and gate types on the triangle.
from qtrojan.circuit import emit_qasm
from qtrojan.qaoa import QaoaParams, build_qaoa_circuit
from qtrojan.trojan import (
    TRIANGLE,
    TrojanSpec,
    benchmark_degradation,
    critical_path,
    insert_trojan,
    noncritical_path,
    rows_to_csv,
    to_dag,
    vulnerability_sweep,
)

c = build_qaoa_circuit(TRIANGLE, QaoaParams((0.6,), (0.3,)))
dag = to_dag(c)
print("critical wire:", critical_path(dag).qubit, " non-critical wire:", noncritical_path(dag).qubit)

# one X on the front of the critical wire, ahead of its Hadamard
print(emit_qasm(insert_trojan(c, TrojanSpec("X", 1, "front", "critical"))).splitlines()[3:6])

# every row re-optimizes the Trojan circuit with the same budget and seed
print(rows_to_csv(vulnerability_sweep(TRIANGLE, budget=2500, seed=0)))

# X slips in before H, becomes a Z on |+> and commutes with the cost layer, so
# the optimizer can route around it here. Larger graphs show real losses.
print(rows_to_csv(benchmark_degradation(budget=2500, seed=0), columns=("graph", "ar_clean", "ar_trojan", "loss_pct")))
