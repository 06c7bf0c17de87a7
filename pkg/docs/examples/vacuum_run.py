"""A single moment run: Gaussian density bump between two vacuum walls.

Run with ``python docs/examples/vacuum_run.py [M]``. The L2 norm of the
moment field can only decrease: the walls let mass out and collisions damp
the non-equilibrium moments.
"""
import sys

import numpy as np

from gradmoments import solver as sv

M = int(sys.argv[1]) if len(sys.argv) > 1 else 10
cfg = sv.SolverConfig(M=M, kn=0.1, n_elements=200, cfl=0.5, t_final=0.3, n_snapshots=6)
tr = sv.run(cfg)
print(f"M={M}: {tr.n_steps} RK4 steps of dt={tr.dt:.3e}")
for t, n in zip(tr.times, tr.snapshot_norms):
    print(f"  t={t:.3f}  ||f||={n:.6f}")
growth = np.diff(tr.step_norms) / tr.step_norms[:-1]
print("largest relative growth in one step", growth.max())

# density profile at the final time
rho = tr.final.evaluate(np.linspace(0, 1, 11))[:, 0]
print("density at x = 0, 0.1, ..., 1:", np.round(rho, 4))
