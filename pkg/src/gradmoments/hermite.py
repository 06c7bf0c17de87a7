"""Orthonormal Hermite polynomials, tensorial multi-indices and Gauss-Hermite rules.

All polynomials use the probabilists' weight ``f0(x) = exp(-x**2/2)/sqrt(2*pi)``
and are normalised so that ``int He_i He_j f0 dx = delta_ij``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "MultiIndexTable",
    "QuadratureRule",
    "hermite_eval",
    "hermite_all",
    "hermite_functions",
    "enumerate_indices",
    "basis_eval",
    "gauss_hermite_rule",
    "tensor_rule",
    "jacobi_matrix",
]


def hermite_all(K, x):
    """Values ``He_0(x), ..., He_K(x)`` stacked along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((K + 1,) + x.shape)
    out[0] = 1.0
    if K >= 1:
        out[1] = x
    for k in range(1, K):
        out[k + 1] = (x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1)
    return out


def hermite_eval(k, x):
    """Orthonormal Hermite polynomial of degree ``k`` at ``x``."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    return hermite_all(k, x)[k]


def hermite_functions(K, x):
    """Values of ``He_k(x) * sqrt(f0(x))`` for ``k = 0..K``.

    The recursion is run on the weighted functions directly, so large degrees
    and large ``|x|`` neither overflow nor underflow prematurely.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((K + 1,) + x.shape)
    out[0] = np.exp(-0.25 * x * x) / (2.0 * np.pi) ** 0.25
    if K >= 1:
        out[1] = x * out[0]
    for k in range(1, K):
        out[k + 1] = (x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1)
    return out


def _indices_of_degree(d, m):
    # descending lexicographic order: largest first component first
    if d == 1:
        return [(m,)]
    out = []
    for first in range(m, -1, -1):
        for rest in _indices_of_degree(d - 1, m - first):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True)
class MultiIndexTable:
    """Tensorial Hermite multi-indices of total degree ``<= M`` in ``d`` dimensions.

    Indices are stored degree-major and in descending lexicographic order
    within a degree. With that order the odd (w.r.t. the first velocity) and
    even subsets are simple masks, ``beta1 -> beta1 - 1`` maps the odd indices
    of degree ``k`` monotonically onto the even ones of degree ``k - 1``, and
    the indices with ``beta1 == 1`` trail each odd degree block.
    """

    d: int
    M: int
    indices: np.ndarray  # (Xi, d) int
    degree: np.ndarray  # (Xi,) int
    odd: np.ndarray  # (Xi,) bool, parity of beta_1
    _lookup: dict = field(repr=False, compare=False)

    @property
    def size(self):
        return len(self.degree)

    @property
    def even(self):
        return ~self.odd

    def n(self, m):
        return int(np.count_nonzero(self.degree == m))

    def n_odd(self, m):
        return int(np.count_nonzero((self.degree == m) & self.odd))

    def n_even(self, m):
        return int(np.count_nonzero((self.degree == m) & ~self.odd))

    @property
    def counts(self):
        """``(n, n_o, n_e)`` as arrays over degrees ``0..M``."""
        n = np.bincount(self.degree, minlength=self.M + 1)
        n_o = np.bincount(self.degree[self.odd], minlength=self.M + 1)
        return n, n_o, n - n_o

    def beta1_odd(self, k):
        """First components of the odd multi-indices of degree ``k``."""
        sel = (self.degree == k) & self.odd
        return self.indices[sel, 0].copy()

    def position(self, beta):
        """Row of multi-index ``beta`` in the table."""
        try:
            return self._lookup[tuple(int(b) for b in beta)]
        except KeyError:
            raise IndexError(f"multi-index {tuple(beta)} not in table") from None

    def select(self, parity, max_degree=None, degree=None):
        """Positions of the odd/even indices, optionally truncated by degree."""
        mask = self.odd if parity == "odd" else ~self.odd
        if max_degree is not None:
            mask = mask & (self.degree <= max_degree)
        if degree is not None:
            mask = mask & (self.degree == degree)
        return np.flatnonzero(mask)


@lru_cache(maxsize=64)
def enumerate_indices(d, M):
    """Build the :class:`MultiIndexTable` for dimension ``d`` and max degree ``M``."""
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if M < 0:
        raise ValueError("max degree must be non-negative")
    rows = [beta for m in range(M + 1) for beta in _indices_of_degree(d, m)]
    indices = np.array(rows, dtype=int).reshape(-1, d)
    indices.setflags(write=False)
    degree = indices.sum(axis=1)
    odd = indices[:, 0] % 2 == 1
    degree.setflags(write=False)
    odd.setflags(write=False)
    lookup = {beta: i for i, beta in enumerate(rows)}
    return MultiIndexTable(d, M, indices, degree, odd, lookup)


def basis_eval(table, i, xi):
    """Tensor-product basis function ``psi_{beta^(i)}`` at velocity ``xi``.

    ``xi`` has trailing dimension ``d``; leading dimensions are broadcast.
    """
    if not 0 <= i < table.size:
        raise IndexError(f"basis index {i} out of range for table of size {table.size}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != table.d:
        raise ValueError("velocity must have trailing dimension d")
    beta = table.indices[i]
    val = np.ones(xi.shape[:-1])
    for p, b in enumerate(beta):
        val = val * hermite_eval(int(b), xi[..., p])
    return val


def jacobi_matrix(n):
    """Symmetric tridiagonal Jacobi matrix of the orthonormal Hermite recursion.

    Off-diagonal entries are ``sqrt(k+1)``; the eigenvalues are the roots of
    ``He_n`` and the matrix is the 1D moment flux Jacobian with ``n`` moments.
    """
    off = np.sqrt(np.arange(1, n, dtype=float))
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values):
        """Sum ``values`` (nodes along the last axis) against the weights."""
        return np.asarray(values) @ self.weights


@lru_cache(maxsize=64)
def gauss_hermite_rule(n):
    """``n``-point Gauss rule for the weight ``f0`` (Golub-Welsch).

    Exact for polynomials of degree ``<= 2n - 1``; weights sum to one.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return QuadratureRule(np.zeros(1), np.ones(1), 1)
    off = np.sqrt(np.arange(1, n, dtype=float))
    nodes, vecs = eigh_tridiagonal(np.zeros(n), off)
    weights = vecs[0] ** 2
    # clean up the exact symmetry of the rule
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes, weights / weights.sum(), n)


def tensor_rule(n, d):
    """Tensor product of the 1D ``n``-point rule; nodes have shape ``(n**d, d)``."""
    rule = gauss_hermite_rule(n)
    grids = np.meshgrid(*([rule.nodes] * d), indexing="ij")
    wgrids = np.meshgrid(*([rule.weights] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return QuadratureRule(nodes, weights, n)
