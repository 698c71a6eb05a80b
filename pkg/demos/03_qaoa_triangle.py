# p=1 QAOA on the triangle: optimize, then look at the landscape around the optimum.
import numpy as np

from qtrojan.qaoa import QaoaParams, brute_force_maxcut, build_qaoa_circuit, expectation, optimize
from qtrojan.trojan import TRIANGLE

e_opt, best_cut = brute_force_maxcut(TRIANGLE)
print(f"max cut {e_opt} with assignment {best_cut}")

res = optimize(TRIANGLE, p=1, budget=2500, seed=0)
print(f"Nelder-Mead: AR={res.ar:.6f} after {res.evaluations_used} evaluations")
print("angles:", res.best_params)

# a coarse grid for comparison
gammas = np.linspace(0, np.pi, 41)
betas = np.linspace(0, np.pi / 2, 21)
grid = np.array([[expectation(TRIANGLE, build_qaoa_circuit(TRIANGLE, QaoaParams((g,), (b,))))
                  for b in betas] for g in gammas])
i, j = np.unravel_index(grid.argmax(), grid.shape)
print(f"grid best E={grid[i, j]:.4f} at gamma={gammas[i]:.3f}, beta={betas[j]:.3f}")

# at zero angles the state is uniform and every edge is cut half the time
print("E(0, 0) =", expectation(TRIANGLE, build_qaoa_circuit(TRIANGLE, QaoaParams((0.0,), (0.0,)))))
