"""Boundary matrices of the 1D moment system and how they scale with M.

Run with ``python docs/examples/boundary_matrices.py``. Prints the norm of the
flux block, the Onsager matrix R = B A^-1 and the constant Theta that enters
the projection error, then shows that a projected boundary state satisfies
the boundary condition it was projected onto.
"""
import numpy as np

from gradmoments import kinetic as kin
from gradmoments import matrices as mx

print(f"{'M':>4} {'|A|':>8} {'|R|':>8} {'min eig R':>10} {'Theta':>8}")
for M in (4, 8, 16, 32, 64):
    m = mx.assemble(1, M)
    R = m.R
    print(f"{M:4d} {mx.spectral_norm(m.A_MM):8.4f} {mx.spectral_norm(R):8.4f} "
          f"{np.linalg.eigvalsh(0.5 * (R + R.T)).min():10.3e} {m.theta:8.4f}")

# |A| is the largest root of He_{M+1}; it grows like 2 sqrt(M) but only slowly reaches that slope
M = 40
roots = np.polynomial.hermite_e.hermeroots([0] * (M + 1) + [1])
print("largest Hermite root", roots.max(), "vs |A|", mx.spectral_norm(mx.flux_matrix(1, M)))

# project a random state onto the vacuum boundary condition: odd = R A even
rng = np.random.default_rng(1)
a = rng.standard_normal(M + 1) / (1 + np.arange(M + 1))
g0 = np.zeros(M // 2)
p = kin.bc_project(a, M, g=g0)
mats = mx.assemble(1, M)
print("boundary residual", np.abs(p[1::2] - mats.bc_map @ p[0::2]).max())
print("projection is idempotent", np.allclose(kin.bc_project(p, M, g=g0), p))

# without g the half-space moments of the input itself are used instead
q = kin.bc_project(a, M)
print("odd part shifted by the half-space moments", np.abs(q[1::2] - p[1::2]).max())
