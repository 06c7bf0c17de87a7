"""Flux and half-space moment matrices, the Onsager boundary matrix and norm checks.

Row/column conventions follow :mod:`gradmoments.hermite`: rows run over the
odd multi-indices (w.r.t. ``xi_1``) of degree ``1..M``, columns over the even
multi-indices of degree ``0..q`` in table order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.csgraph import connected_components

from .hermite import enumerate_indices, hermite_all, hermite_functions

__all__ = [
    "MomentMatrices",
    "half_range_table",
    "half_range_integral",
    "half_range_recurrence",
    "clear_caches",
    "flux_matrix",
    "half_matrix",
    "onsager_matrix",
    "theta",
    "assemble",
    "spectral_norm",
    "inverse_flux_columns",
    "validate_flux_blocks",
    "bidiagonal_unit_norm_solve",
    "half_space_odd_moments",
    "inflow_moments",
    "half_space_identity_check",
]

# Seeds of the half-range recurrence: int_0^inf f0 and f0(0).
_H00 = 0.5
_H10 = 1.0 / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=8)
def _half_range_cached(K, h00, h10):
    # (f0 He_n')' = -n f0 He_n; pairing with He_j on (0, inf) and antisymmetrising gives
    #   (j - i) h_ij = f0(0) (He_i(0) He_j'(0) - He_j(0) He_i'(0)),  He_n' = sqrt(n) He_{n-1}.
    # For i, j of opposite parity exactly one product survives, so there is no cancellation.
    he0 = hermite_all(K, 0.0)
    dhe0 = np.zeros(K + 1)
    dhe0[1:] = np.sqrt(np.arange(1, K + 1)) * he0[:-1]
    idx = np.arange(K + 1)
    diff = idx[None, :] - idx[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = h10 * (he0[:, None] * dhe0[None, :] - he0[None, :] * dhe0[:, None]) / diff
    h[diff % 2 == 0] = 0.0
    h[idx, idx] = h00
    h.setflags(write=False)
    return h


def half_range_recurrence(K, h00=None, h10=None):
    """Same table by the forward recurrence in ``i``; loses accuracy for large ``K``.

    ``sqrt(i+1) h_{i+1,j} = He_i(0) He_j(0) f0(0) + sqrt(j) h_{i,j-1}``. Kept as
    an independent cross-check at moderate degrees.
    """
    h00 = _H00 if h00 is None else h00
    h10 = _H10 if h10 is None else h10
    he0 = hermite_all(K, 0.0)
    h = np.zeros((K + 1, K + 1))
    idx = np.arange(K + 1)
    h[idx, idx] = h00
    for j in range(1, K + 1, 2):
        h[0, j] = he0[j - 1] * h10 / math.sqrt(j)
    for i in range(K):
        j = np.arange(i % 2, K + 1, 2)
        prev = np.zeros(len(j))
        pos = j >= 1
        prev[pos] = np.sqrt(j[pos]) * h[i, j[pos] - 1]
        h[i + 1, j] = (he0[i] * he0[j] * h10 + prev) / math.sqrt(i + 1)
    return h


def half_range_table(K):
    """Matrix ``h[i, j] = int_0^inf He_i He_j f0 dx`` for ``i, j <= K``."""
    return _half_range_cached(int(K), _H00, _H10)


def half_range_integral(i, j):
    """Single half-range integral ``int_0^inf He_i He_j f0 dx``."""
    return float(half_range_table(max(i, j))[i, j])


def _cap(M, variant):
    if variant == "MM":
        return M
    if variant == "MM1":
        if M < 1:
            raise ValueError("variant MM1 needs M >= 1")
        return M - 1
    q = int(variant)
    if q < 0:
        raise ValueError("column degree must be non-negative")
    return q


def _rows_cols(d, M, q):
    table = enumerate_indices(d, max(M, q))
    rows = table.select("odd", max_degree=M)
    cols = table.select("even", max_degree=q)
    return table, rows, cols


def flux_matrix(d, M, variant="MM", sparse=False):
    """Odd-even block ``<psi_o xi_1 psi_e f0>`` of the flux Jacobian.

    ``variant`` is ``"MM"`` (even degrees up to ``M``), ``"MM1"`` (up to
    ``M - 1``) or an integer column degree cap. Entries come straight from
    the three-term recursion: ``sqrt(max(b1, g1))`` when the multi-indices
    agree in the transverse components and ``|b1 - g1| = 1``.
    """
    q = _cap(M, variant)
    table, rows, cols = _rows_cols(d, M, q)
    colpos = {int(c): n for n, c in enumerate(cols)}
    r_idx, c_idx, vals = [], [], []
    for n, row in enumerate(rows):
        beta = table.indices[row]
        for shift in (-1, 1):
            gamma = beta.copy()
            gamma[0] += shift
            if gamma.sum() > q:
                continue
            c = colpos.get(table.position(gamma))
            if c is None:
                continue
            r_idx.append(n)
            c_idx.append(c)
            vals.append(math.sqrt(max(beta[0], gamma[0])))
    mat = sp.csr_array((vals, (r_idx, c_idx)), shape=(len(rows), len(cols)))
    return mat if sparse else mat.toarray()


def _tail_groups(table, positions):
    groups = {}
    for n, p in enumerate(positions):
        groups.setdefault(tuple(table.indices[p, 1:]), []).append(n)
    return groups


def half_matrix(d, M, variant="MM", sparse=False):
    """Half-space matrix ``2 <psi_o sqrt(f0), psi_e sqrt(f0)>`` over ``xi_1 > 0``.

    Transverse directions integrate over the whole line, so entries vanish
    unless the tails agree; otherwise they equal ``2 h[b1, g1]``.
    """
    q = _cap(M, variant)
    table, rows, cols = _rows_cols(d, M, q)
    h = half_range_table(max(M, q))
    row_groups = _tail_groups(table, rows)
    col_groups = _tail_groups(table, cols)
    r_idx, c_idx, vals = [], [], []
    for tail, rr in row_groups.items():
        cc = col_groups.get(tail)
        if not cc:
            continue
        rr = np.array(rr)
        cc = np.array(cc)
        block = 2.0 * h[np.ix_(table.indices[rows[rr], 0], table.indices[cols[cc], 0])]
        r_idx.append(np.repeat(rr, len(cc)))
        c_idx.append(np.tile(cc, len(rr)))
        vals.append(block.ravel())
    if vals:
        r_idx, c_idx, vals = map(np.concatenate, (r_idx, c_idx, vals))
    mat = sp.csr_array((vals, (r_idx, c_idx)), shape=(len(rows), len(cols)))
    return mat if sparse else mat.toarray()


def onsager_matrix(d, M):
    """``R = B^(M,M-1) (A^(M,M-1))^-1`` by back-substitution on the triangular flux block."""
    if M < 1:
        raise ValueError("Onsager matrix needs M >= 1")
    A1 = flux_matrix(d, M, "MM1")
    B1 = half_matrix(d, M, "MM1")
    assert A1.shape[0] == A1.shape[1], "A^(M,M-1) must be square"
    assert np.all(np.tril(A1, -1) == 0.0) and np.all(np.diag(A1) > 0.0), \
        "A^(M,M-1) must be upper triangular with positive diagonal"
    # R A1 = B1  <=>  A1^T R^T = B1^T
    return solve_triangular(A1, B1.T, trans="T", lower=False).T


@dataclass(frozen=True)
class MomentMatrices:
    d: int
    M: int
    A_MM: np.ndarray
    A_MM1: np.ndarray
    B_MM: np.ndarray
    B_MM1: np.ndarray
    R: np.ndarray
    bc_map: np.ndarray
    theta: float
    lower_block_residual: float

    @property
    def odd_rows(self):
        return enumerate_indices(self.d, self.M).select("odd")

    @property
    def even_cols(self):
        return enumerate_indices(self.d, self.M).select("even")


def _boundary_difference(d, M, R, A_MM, B_MM):
    table = enumerate_indices(d, M)
    diff = R @ A_MM - B_MM
    top = table.degree[table.select("even")] == M
    lower = diff[:, ~top]
    scale = max(1.0, float(np.abs(diff).max(initial=0.0)))
    lower_res = float(np.abs(lower).max(initial=0.0)) / scale
    highest = diff[:, top]
    th = spectral_norm(highest) if highest.size else 0.0
    return th, lower_res


@lru_cache(maxsize=32)
def assemble(d, M):
    """All boundary-related matrices for ``(d, M)``; ``M >= 1``."""
    if M < 1:
        raise ValueError("boundary matrices need M >= 1")
    A_MM = flux_matrix(d, M, "MM")
    A_MM1 = flux_matrix(d, M, "MM1")
    B_MM = half_matrix(d, M, "MM")
    B_MM1 = half_matrix(d, M, "MM1")
    R = onsager_matrix(d, M)
    th, lower = _boundary_difference(d, M, R, A_MM, B_MM)
    mats = MomentMatrices(d, M, A_MM, A_MM1, B_MM, B_MM1, R, R @ A_MM, th, lower)
    for arr in (A_MM, A_MM1, B_MM, B_MM1, R, mats.bc_map):
        arr.setflags(write=False)
    return mats


def theta(d, M, check=True):
    """``|| R A_{M,M} - B_{M,M} ||_2`` over the highest even degree.

    The remaining column blocks of ``R A^(M,M) - B^(M,M)`` vanish; with
    ``check`` an ``AssertionError`` is raised if they do not (to 1e-10).
    """
    mats = assemble(d, M)
    if check:
        assert mats.lower_block_residual < 1e-10, \
            f"lower blocks of R A - B do not vanish: {mats.lower_block_residual:.3e}"
    return mats.theta


def _dense_norm(G):
    G = np.asarray(G, dtype=float)
    if G.size == 0:
        return 0.0
    gram = G.T @ G if G.shape[1] <= G.shape[0] else G @ G.T
    return math.sqrt(max(float(np.linalg.eigvalsh(gram)[-1]), 0.0))


def _power_norm(G, tol=1e-12, maxiter=20000):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(G.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(maxiter):
        y = G.T @ (G @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = math.sqrt(ny)
        x = y / ny
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    raise RuntimeError("power iteration for the spectral norm did not converge")


def spectral_norm(G, dense_limit=2500):
    """Largest singular value of a dense or sparse matrix.

    Sparse inputs are split into the connected components of their bipartite
    sparsity graph (the matrix is block diagonal up to permutation) and each
    block is handled densely; blocks above ``dense_limit`` fall back to
    power iteration on ``G^T G``.
    """
    if not sp.issparse(G):
        G = np.asarray(G, dtype=float)
        if min(G.shape, default=0) <= dense_limit:
            return _dense_norm(G)
        return _power_norm(G)
    G = sp.csr_array(G)
    m, n = G.shape
    if G.nnz == 0:
        return 0.0
    coo = G.tocoo()
    graph = sp.coo_array(
        (np.ones(2 * coo.nnz), (np.r_[coo.row, coo.col + m], np.r_[coo.col + m, coo.row])),
        shape=(m + n, m + n),
    )
    ncomp, labels = connected_components(graph, directed=False)
    rlab, clab = labels[:m], labels[m:]
    # sparse fancy indexing per component is slow; slice a dense copy when it fits
    D = G.toarray() if m * n <= 4_000_000 else None
    rorder, corder = np.argsort(rlab, kind="stable"), np.argsort(clab, kind="stable")
    rsplit = np.searchsorted(rlab[rorder], np.arange(ncomp + 1))
    csplit = np.searchsorted(clab[corder], np.arange(ncomp + 1))
    best = 0.0
    for c in np.unique(rlab[np.unique(coo.row)]):
        rr = rorder[rsplit[c]:rsplit[c + 1]]
        cc = corder[csplit[c]:csplit[c + 1]]
        if D is not None and min(len(rr), len(cc)) <= dense_limit:
            val = _dense_norm(D[np.ix_(rr, cc)])
        else:
            block = G[rr][:, cc]
            val = _dense_norm(block.toarray()) if min(block.shape) <= dense_limit else _power_norm(block)
        best = max(best, val)
    return best


def inverse_flux_columns(d, M):
    """Columns of ``(A^(M,M-1))^-1`` that multiply the block ``A_{M,M}``.

    These are the columns belonging to the odd indices of degree ``M - 1``;
    the result is empty when that degree has no odd indices.
    """
    table = enumerate_indices(d, M)
    A1 = flux_matrix(d, M, "MM1")
    inv = solve_triangular(A1, np.eye(A1.shape[0]), lower=False)
    deg = table.degree[table.select("odd")]
    return inv[:, deg == M - 1]


def validate_flux_blocks(d, M):
    """Check the structural claims about the flux matrices for ``(d, M)``.

    Returns ``{claim: bool}`` plus an ``"details"`` entry with the counts of
    ones in the first-component vectors of each odd degree.
    """
    table = enumerate_indices(d, M + 1)
    _, n_o, n_e = table.counts
    A = flux_matrix(d, M, "MM")
    A1 = flux_matrix(d, M, "MM1")
    odd_deg = table.degree[table.select("odd", max_degree=M)]
    even_deg = table.degree[table.select("even", max_degree=M)]
    report = {}
    report["n_e(k-1) == n_o(k)"] = bool(all(n_e[k - 1] == n_o[k] for k in range(1, M + 2)))
    report["A_MM1 square"] = A1.shape[0] == A1.shape[1]
    report["A_MM1 upper triangular, nonzero diagonal"] = bool(
        report["A_MM1 square"] and np.all(np.tril(A1, -1) == 0) and np.all(np.diag(A1) != 0)
    )
    nz_r, nz_c = np.nonzero(A)
    report["A_MM block bidiagonal"] = bool(
        np.all(np.isin(even_deg[nz_c] - odd_deg[nz_r], (-1, 1)))
    )
    report["A_MM no entries below main diagonal"] = bool(np.all(np.tril(A1, -1) == 0))
    diag_ok = off_ok = odd_ok = ident_ok = True
    ones = {}
    for k in range(1, M + 1):
        b1 = table.beta1_odd(k)
        if len(b1) == 0:
            continue
        odd_ok &= bool(np.all(b1 % 2 == 1))
        rsel = odd_deg == k
        Dm = A[np.ix_(rsel, even_deg == k - 1)]
        diag_ok &= bool(np.allclose(Dm, np.diag(np.sqrt(b1)), rtol=0, atol=1e-14))
        n1 = int(np.count_nonzero(b1 == 1))
        ones[k] = n1
        if n1:
            ident_ok &= bool(np.array_equal(Dm[-n1:, -n1:], np.eye(n1)))
        if k < M:
            Dp = A[np.ix_(rsel, even_deg == k + 1)]
            want = np.zeros_like(Dp)
            want[:, : len(b1)] = np.diag(np.sqrt(b1 + 1.0))
            off_ok &= bool(np.allclose(Dp, want, rtol=0, atol=1e-14))
    report["beta1 odd entries all odd"] = odd_ok
    report["D(k,k-1) diagonal = sqrt(beta1)"] = diag_ok
    report["D(k,k+1) = (diag sqrt(beta1+1), 0)"] = off_ok
    report["D(k,k-1) trailing identity block"] = ident_ok
    R = assemble(d, M).R
    sym = float(np.linalg.norm(R - R.T, 2) / np.linalg.norm(R, 2))
    report["R symmetric positive definite"] = bool(
        sym < 1e-10 and np.linalg.eigvalsh(0.5 * (R + R.T))[0] > 0
    )
    report["details"] = {"ones_in_beta1": ones, "R_symmetry_residual": sym}
    return report


def bidiagonal_unit_norm_solve(n):
    """Solve ``A x = e_n`` with ``A_ii = sqrt(2i-1)``, ``A_i,i+1 = sqrt(2i)``.

    Returns ``(x, ||x||_2)``; the norm is one for every ``n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    x = np.empty(n)
    x[-1] = 1.0 / math.sqrt(2 * n - 1)
    for i in range(n - 1, 0, -1):  # 1-based row i
        x[i - 1] = -math.sqrt(2 * i) * x[i] / math.sqrt(2 * i - 1)
    return x, float(np.linalg.norm(x))


def half_space_odd_moments(coeffs, d, M, table=None):
    """``2 <psi_o sqrt(f0), r>`` over ``xi_1 < 0`` for ``r`` given by Hermite coefficients.

    ``coeffs`` are the coefficients of ``r`` in the table of ``d`` and
    ``K = table.M >= M``. On the negative half-line the even/odd products flip
    sign, so the value is ``mu_o^M(r) - B^(M,K) mu_e^K(r)``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if table is None:
        K = _max_degree_for_size(d, coeffs.shape[-1])
        table = enumerate_indices(d, K)
    K = table.M
    if K < M:
        raise ValueError("coefficient list must reach degree M")
    odd_sel = table.select("odd", max_degree=M)
    B = half_matrix(d, M, K)
    return coeffs[..., odd_sel] - coeffs[..., table.select("even")] @ B.T


def _max_degree_for_size(d, size):
    K, total = 0, 0
    while total < size:
        total += math.comb(K + d - 1, d - 1)
        K += 1
    if total != size:
        raise ValueError(f"{size} coefficients do not fill whole degrees in d={d}")
    return K - 1


def _half_line_rule(M, n=None, span=None):
    # Gauss-Legendre on (-L, 0); the Hermite functions up to degree M live in |x| < sqrt(4M+2)
    L = span if span is not None else math.sqrt(4 * M + 2) + 12.0
    n = n if n is not None else 4 * M + 200
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * L * (x - 1.0), 0.5 * L * w


def inflow_moments(f_in, M, side="right", n=None, span=None):
    """Half-space odd moments of an inflow datum in 1D, by quadrature.

    ``f_in(xi)`` is the incoming trace in the same normalisation as the
    moment expansion, i.e. ``f = sum_k lambda_k He_k sqrt(f0)``. For the
    right wall the incoming velocities are ``xi < 0``; for the left wall
    the datum is mirrored so that the result can be fed to the reflected
    right-wall operator. Vacuum (``f_in is None``) gives exact zeros.
    """
    n_odd = (M + 1) // 2
    if f_in is None:
        return np.zeros(n_odd)
    x, w = _half_line_rule(M, n, span)
    vals = f_in(x) if side == "right" else f_in(-x)
    psi = hermite_functions(M, x)
    return 2.0 * (psi[1::2] * np.asarray(vals, dtype=float)) @ w


def half_space_identity_check(M, q, coeffs, n=None):
    """Residual ``|| mu_o^M(r) - B^(M,q) mu_e^q(r) - g(r) ||`` for a 1D test function.

    ``r = sum_k coeffs[k] He_k sqrt(f0)``; ``g`` is evaluated by half-line
    quadrature of ``r`` itself, independent of the half-range recurrence.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = len(coeffs) - 1
    full = np.zeros(max(K, q, M) + 1)
    full[: K + 1] = coeffs
    mu_o = full[1 : M + 1 : 2]
    mu_e = full[0 : q + 1 : 2]

    def r(x):
        return full @ hermite_functions(len(full) - 1, x)

    top = len(full) - 1
    g = inflow_moments(r, M, "right", n=n if n is not None else 4 * top + 200,
                       span=math.sqrt(4 * top + 2) + 12.0)
    B = half_matrix(1, M, q)
    return float(np.linalg.norm(mu_o - B @ mu_e - g))


def clear_caches():
    """Drop memoised tables and matrices, e.g. after changing the recurrence seeds."""
    _half_range_cached.cache_clear()
    assemble.cache_clear()
