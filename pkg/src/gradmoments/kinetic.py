"""Collision operators in moment space and the two projections onto the Hermite space.

Moment vectors hold the coefficients ``lambda`` of ``f = sum_i lambda_i psi_i sqrt(f0)``
in the order of :func:`gradmoments.hermite.enumerate_indices`; leading array
axes are treated as batch dimensions throughout.

Moment-space form of the linearised BGK equilibrium
---------------------------------------------------
The linearised Maxwellian ``(rho + v.xi + theta/2 (|xi|^2 - d)) sqrt(f0)`` is
spanned by ``psi_0``, the ``d`` degree-one functions and the isotropic
combination ``(|xi|^2 - d) / sqrt(2 d) = sum_p psi_{2 e_p} / sqrt(d)``, using
``xi_p^2 - 1 = sqrt(2) He_2(xi_p)``. These ``d + 2`` vectors are orthonormal,
so the equilibrium map is the orthogonal projection onto them; for ``d = 3``
the shift ``|xi|^2 - d`` is the familiar ``|xi|^2 - 3``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .hermite import basis_eval, enumerate_indices, tensor_rule
from .matrices import assemble, half_space_odd_moments, _max_degree_for_size

__all__ = [
    "MomentVector",
    "BGKOperator",
    "bgk_apply",
    "equilibrium_moments",
    "orthogonal_project",
    "bc_project",
    "q_seminorm",
]


@dataclass(frozen=True)
class MomentVector:
    d: int
    M: int
    coeffs: np.ndarray

    @classmethod
    def from_function(cls, func, d, M, nodes=None):
        """Moments ``<psi_i sqrt(f0), r>`` of ``r(xi) = g(xi) sqrt(f0(xi))``.

        ``func`` returns ``g`` (the density divided by ``sqrt(f0)``), which
        reduces the moment integrals to Gauss-Hermite sums.
        """
        table = enumerate_indices(d, M)
        rule = tensor_rule(nodes or (M + 10), d)
        vals = func(rule.nodes if d > 1 else rule.nodes[:, 0])
        psi = np.stack([basis_eval(table, i, rule.nodes) for i in range(table.size)])
        return cls(d, M, psi @ (rule.weights * vals))

    def norm(self):
        return float(np.linalg.norm(self.coeffs))


class BGKOperator:
    """Linearised BGK collision operator ``(P_eq - I) / Kn`` acting on moments.

    The operator is applied matrix-free: project onto the ``d + 2`` collision
    invariants and subtract.
    """

    kind = "BGK"

    def __init__(self, d, M, kn):
        if M < 2:
            raise ValueError("BGK needs M >= 2 to represent its collision invariants")
        if not kn > 0:
            raise ValueError("Knudsen number must be positive")
        self.d, self.M, self.kn = d, M, float(kn)
        table = enumerate_indices(d, M)
        basis = np.zeros((d + 2, table.size))
        basis[0, 0] = 1.0
        for p in range(d):
            e = np.zeros(d, dtype=int)
            e[p] = 1
            basis[1 + p, table.position(e)] = 1.0
            basis[d + 1, table.position(2 * e)] = 1.0 / math.sqrt(d)
        self.kernel_basis = basis
        self.kernel_mask = np.flatnonzero(np.any(basis != 0, axis=0))

    @property
    def norm(self):
        """Operator norm ``1 / Kn``."""
        return 1.0 / self.kn

    def equilibrium(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return (alpha @ self.kernel_basis.T) @ self.kernel_basis

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        return (self.equilibrium(alpha) - alpha) / self.kn

    def quadratic_form(self, alpha):
        """``-<alpha, Q alpha>`` along the last axis."""
        alpha = np.asarray(alpha, dtype=float)
        return -np.sum(alpha * self(alpha), axis=-1)


def _table_for(alpha, d):
    return enumerate_indices(d, _max_degree_for_size(d, np.shape(alpha)[-1]))


def bgk_apply(alpha, kn, d=1):
    """``(P_eq alpha - alpha) / Kn`` for a moment vector of full degrees."""
    table = _table_for(alpha, d)
    return BGKOperator(d, table.M, kn)(alpha)


def equilibrium_moments(alpha, d=1):
    """Moments of the linearised Maxwellian sharing ``rho, v, theta`` with ``alpha``."""
    table = _table_for(alpha, d)
    return BGKOperator(d, table.M, 1.0).equilibrium(alpha)


def orthogonal_project(coeffs, M, d=1):
    """Truncate a coefficient vector of higher degree to degrees ``<= M``."""
    coeffs = np.asarray(coeffs, dtype=float)
    table = _table_for(coeffs, d)
    if table.M < M:
        raise ValueError("input degree is below the projection degree")
    return coeffs[..., : enumerate_indices(d, M).size].copy()


def bc_project(coeffs, M, g=None, d=1):
    """Projection honouring the stable boundary condition.

    Even coefficients of degree ``<= M`` are kept; the odd ones are replaced
    by ``R A^(M,M) mu_e^M + g``. Without ``g`` the half-space odd moments of
    the input itself are used, which is the analytical projection; pass the
    inflow moments to impose a wall datum instead.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    big = _table_for(coeffs, d)
    if big.M < M:
        raise ValueError("input degree is below the projection degree")
    mats = assemble(d, M)
    table = enumerate_indices(d, M)
    low = coeffs[..., : table.size]
    odd = table.select("odd")
    even = table.select("even")
    if g is None:
        g = half_space_odd_moments(coeffs, d, M, table=big)
    out = low.copy()
    out[..., odd] = low[..., even] @ mats.bc_map.T + g
    return out


def q_seminorm(alpha, op):
    """``|f|_Q = -<f, Q f>``; non-negative and zero exactly on the kernel."""
    return op.quadratic_form(alpha)
