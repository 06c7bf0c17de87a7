"""Error norms, moment-decay statistics and predicted/observed convergence rates.

Fields are handled as raw P1 coefficient arrays of shape ``(2, n_elements, n)``
(or :class:`~gradmoments.solver.MomentField`); trajectories are
:class:`~gradmoments.solver.Trajectory` objects. In 1D ``n(m) = 1``, so the
moment of degree ``m`` is the single component ``m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .matrices import assemble, half_matrix, spectral_norm
from .solver import SQ3

__all__ = [
    "DecaySeries",
    "RateReport",
    "l2_error",
    "l2_error_dvm",
    "moment_decay",
    "filter_artefacts",
    "fit_slope",
    "decay_rate",
    "sobolev_index",
    "predicted_rate",
    "theorem_rate",
    "observed_rate",
    "bc_projection_field",
    "q_seminorm_history",
    "hermite_sobolev_norm",
    "error_bound_rhs",
]

FLOOR = 1e-13
ARTEFACT_TOL = 0.03


def _coeffs(f):
    return np.asarray(getattr(f, "u", f), dtype=float)


def _pad(u, n):
    if u.shape[-1] == n:
        return u
    out = np.zeros(u.shape[:-1] + (n,))
    out[..., : u.shape[-1]] = u
    return out


def l2_error(ref, approx, h=None):
    """``||f_ref - f_M||_{L^2(Omega x R)}`` from P1 moment coefficients.

    By Parseval the missing moments of ``approx`` count as zero, which adds the
    tail ``sum_{m > M} ||lambda_m^ref||^2``.
    """
    if h is None:
        mesh = getattr(ref, "mesh", None) or getattr(approx, "mesh")
        h = mesh.h
    a, b = _coeffs(ref), _coeffs(approx)
    if a.shape[:2] != b.shape[:2]:
        raise ValueError("fields live on different meshes")
    n = max(a.shape[-1], b.shape[-1])
    d = _pad(a, n) - _pad(b, n)
    return math.sqrt(h * float(np.sum(d * d)))


def l2_error_dvm(dvm_u, grid, approx, h):
    """``||f_dvm - f_M||`` with ``f_M`` synthesised on the velocity grid.

    The velocity integral uses the grid's midpoint rule; space is exact for P1.
    """
    a = np.asarray(dvm_u, dtype=float)
    b = grid.synthesize(_coeffs(approx))
    if a.shape[:2] != b.shape[:2]:
        raise ValueError("fields live on different meshes")
    d = a - b
    return math.sqrt(h * grid.dv * float(np.sum(d * d)))


@dataclass
class DecaySeries:
    """One of ``N_m``, ``N_m^t``, ``N_m^x`` over ``m = 0..M_ref``.

    ``values`` are maxima over the stored snapshots, ``final`` the values at
    the last snapshot.
    """

    kind: str
    values: np.ndarray
    final: np.ndarray
    mask: np.ndarray | None = None

    @property
    def m(self):
        return np.arange(len(self.values))

    def with_mask(self, mask):
        return DecaySeries(self.kind, self.values, self.final, np.asarray(mask, dtype=bool))

    def points(self, parity=None, use_final=False):
        """``(m, value)`` pairs kept by the mask, ``m >= 1``, optionally one parity."""
        vals = self.final if use_final else self.values
        keep = self.m >= 1
        if self.mask is not None:
            keep &= self.mask
        if parity == "odd":
            keep &= self.m % 2 == 1
        elif parity == "even":
            keep &= self.m % 2 == 0
        return self.m[keep], vals[keep]


def _norms_over_space(U, h):
    # U: (..., 2, n_elements, n) -> (..., n)
    return np.sqrt(h * np.sum(U * U, axis=(-3, -2)))


def moment_decay(traj):
    """``(N, N_t, N_x)`` series of a reference trajectory.

    ``N_t`` uses the semi-discrete right-hand side at each snapshot; ``N_x``
    uses the elementwise derivative ``2 sqrt(3) u1 / h`` of the P1 field.
    """
    h = traj.mesh.h
    S = traj.snapshots
    N = _norms_over_space(S, h)
    Nt = np.stack([_norms_over_space(traj.rhs(i), h) for i in range(len(S))])
    dx = 2.0 * SQ3 * S[:, 1] / h
    Nx = np.sqrt(h * np.sum(dx * dx, axis=1))
    return (DecaySeries("N", N.max(0), N[-1]),
            DecaySeries("N_t", Nt.max(0), Nt[-1]),
            DecaySeries("N_x", Nx.max(0), Nx[-1]))


def filter_artefacts(series, coarser, tol=ARTEFACT_TOL, floor=FLOOR, use_final=False):
    """Keep ``m`` iff ``|N_m - N'_m| / N_m < tol`` and ``N_m >= floor``.

    ``coarser`` is the same quantity from the ``M_ref - 1`` run (or any fewer-
    moment companion); moments it lacks are dropped.
    """
    a = np.asarray(series.final if use_final else series.values, dtype=float) \
        if isinstance(series, DecaySeries) else np.asarray(series, dtype=float)
    b = np.asarray(coarser.final if use_final else coarser.values, dtype=float) \
        if isinstance(coarser, DecaySeries) else np.asarray(coarser, dtype=float)
    mask = np.zeros(len(a), dtype=bool)
    k = min(len(a), len(b))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(a[:k] - b[:k]) / a[:k]
    mask[:k] = rel < tol
    mask &= a >= floor
    return mask


def fit_slope(m, values, mask=None):
    """Least-squares slope of ``log(values)`` against ``log(m)``."""
    m = np.asarray(m, dtype=float)
    v = np.asarray(values, dtype=float)
    if mask is not None:
        m, v = m[mask], v[mask]
    if len(m) < 2:
        raise ValueError("need at least two points to fit a slope")
    if np.any(v <= 0) or np.any(m <= 0):
        raise ValueError("log-log fit needs positive abscissae and values")
    x, y = np.log(m), np.log(v)
    x0 = x - x.mean()
    den = float(x0 @ x0)
    if den == 0:
        raise ValueError("degenerate fit: all abscissae coincide")
    return float(x0 @ (y - y.mean()) / den)


def decay_rate(series, parity=None, use_final=False):
    """Positive decay rate ``s`` of a masked :class:`DecaySeries`."""
    m, v = series.points(parity, use_final)
    return -fit_slope(m, v)


def sobolev_index(s):
    """Hermite-Sobolev index ``k = s - 1/2`` of a decay rate ``s``."""
    return float(s) - 0.5


def _pair(k):
    if np.ndim(k) == 0:
        return (float(k), float(k))
    e, o = k
    return (float(e), float(o))


def predicted_rate(k, k_t, k_x):
    """``min{k, k_t, k_x - 1/2}`` over both parities; each index may be an ``(even, odd)`` pair."""
    return min(*_pair(k), *_pair(k_t), *(v - 0.5 for v in _pair(k_x)))


def theorem_rate(k, k_t, k_x):
    """Unsharpened rate ``min{k - 1/2, k_t - 1/2, k_x^e - 1, k_x^o - 1/2}``."""
    kxe, kxo = _pair(k_x)
    return min(*(v - 0.5 for v in _pair(k)), *(v - 0.5 for v in _pair(k_t)), kxe - 1.0, kxo - 0.5)


def observed_rate(Ms, errors):
    """``-slope`` of ``(log M, log E_M)``; at least three points."""
    if len(Ms) < 3:
        raise ValueError("need at least three values of M")
    return -fit_slope(Ms, errors)


# -- boundary-respecting projection of a reference field -------------------------------

def _gauss3(mesh):
    s, w = np.polynomial.legendre.leggauss(3)
    x = mesh.centers[:, None] + 0.5 * mesh.h * s[None, :]
    return s, w, x


def _point_values(u, s):
    # u: (2, n_el, n), s: (q,) -> (n_el, q, n)
    return u[0][:, None, :] + SQ3 * s[None, :, None] * u[1][:, None, :]


def _bc_project_points(vals, M):
    """Right- and left-wall projections of full coefficient vectors (1D)."""
    K = vals.shape[-1] - 1
    mats = assemble(1, M)
    B = half_matrix(1, M, K)
    sign = np.where(np.arange(K + 1) % 2 == 0, 1.0, -1.0)
    out = []
    for w in (vals, sign * vals):
        g = w[..., 1 : M + 1 : 2] - w[..., 0::2] @ B.T
        p = np.array(w[..., : M + 1], copy=True)
        p[..., 1::2] = w[..., 0 : M + 1 : 2] @ mats.bc_map.T + g
        out.append(p)
    right, left = out
    return right, sign[: M + 1] * left


def bc_projection_field(u_ref, mesh, M, delta=0.5):
    """Point values of ``Pi_hat_M f`` at 3 Gauss points per element.

    Near each wall the wall projection is blended linearly into the orthogonal
    projection over a layer of width ``delta``: at distance ``r`` the weight of
    the wall operator is ``max(0, 1 - r / delta)``. Returns ``(values, weights)``
    with values ``(n_el, 3, M+1)`` and quadrature weights ``(n_el, 3)`` summing to
    ``|Omega|``.
    """
    s, w, x = _gauss3(mesh)
    vals = _point_values(np.asarray(u_ref, dtype=float), s)
    ortho = vals[..., : M + 1]
    if M == 0:
        return ortho, 0.5 * mesh.h * np.broadcast_to(w, x.shape)
    right, left = _bc_project_points(vals, M)
    wr = np.clip(1.0 - (mesh.x_hi - x) / delta, 0.0, 1.0)[..., None]
    wl = np.clip(1.0 - (x - mesh.x_lo) / delta, 0.0, 1.0)[..., None]
    proj = wr * right + wl * left + (1.0 - wr - wl) * ortho
    return proj, 0.5 * mesh.h * np.broadcast_to(w, x.shape)


def projection_error(u_ref, mesh, M, delta=0.5):
    """``||f - Pi_hat_M f||_{L^2(Omega x R)}`` for a reference field of higher degree."""
    proj, qw = bc_projection_field(u_ref, mesh, M, delta)
    s, _, _ = _gauss3(mesh)
    vals = _point_values(np.asarray(u_ref, dtype=float), s)
    d = vals.copy()
    d[..., : M + 1] -= proj
    return math.sqrt(float(np.sum(qw[..., None] * d * d)))


def q_seminorm_history(ref, approx, kn, delta=0.5):
    """``|e_M(t)|_Q`` per shared snapshot and its trapezoidal time integral.

    ``e_M = Pi_hat_M f_ref - f_M``; ``|e|_Q = -<e, Q e>`` is the quadratic
    form of the BGK operator, i.e. ``||(I - P_eq) e||^2 / Kn``.
    """
    if len(ref.times) != len(approx.times) or not np.allclose(ref.times, approx.times, rtol=0, atol=1e-12):
        raise ValueError("reference and approximation need identical snapshot times")
    M = approx.snapshots.shape[-1] - 1
    mesh = approx.mesh
    s, _, _ = _gauss3(mesh)
    hist = np.empty(len(ref.times))
    for i in range(len(ref.times)):
        proj, qw = bc_projection_field(ref.snapshots[i], mesh, M, delta)
        e = proj - _point_values(approx.snapshots[i], s)
        noneq = e[..., 3:] if M >= 2 else e[..., :0]
        hist[i] = float(np.sum(qw[..., None] * noneq * noneq)) / kn
    return hist, float(np.trapezoid(hist, ref.times) if hasattr(np, "trapezoid") else np.trapz(hist, ref.times))


# -- error bound -----------------------------------------------------------------------

def hermite_sobolev_norm(norms_m, k, parity=None, d=1):
    """``(sum_m (2m + d)^{2k} ||lambda_m||^2)^{1/2}`` from per-degree norms, one parity optional."""
    norms_m = np.asarray(norms_m, dtype=float)
    m = np.arange(norms_m.shape[-1])
    sel = np.ones_like(m, dtype=bool) if parity is None else (m % 2 == (1 if parity == "odd" else 0))
    wgt = (2.0 * m + d) ** (2.0 * max(k, 0.0))
    return np.sqrt(np.sum(wgt[sel] * norms_m[..., sel] ** 2, axis=-1))


def error_bound_rhs(traj, M, indices, kn, t_final=None, delta=0.5):
    """Right-hand side of the a-priori bound for ``||E_M(T)||`` (1D).

    ``indices`` maps ``"k"``, ``"k_t"``, ``"k_x"`` to ``(even, odd)`` pairs.
    Returns the total and its parts as a dict. The C0-in-time norms are maxima
    over the stored snapshots of the reference trajectory.
    """
    d = 1
    h = traj.mesh.h
    S = traj.snapshots
    T = traj.times[-1] if t_final is None else t_final
    mats = assemble(d, M)
    th = mats.theta
    normA = spectral_norm(mats.A_MM)
    qn = 1.0 / kn if math.isfinite(kn) else 0.0
    lam = _norms_over_space(S, h)  # (snap, n)
    lam_t = np.stack([_norms_over_space(traj.rhs(i), h) for i in range(len(S))])
    dx = 2.0 * SQ3 * S[:, 1] / h
    lam_x = np.sqrt(h * np.sum(dx * dx, axis=1))
    c = 2.0 * (M + 1) + d
    even_M = M % 2 == 0  # degree-M even block is empty for odd M in 1D

    def top_even(table):
        return float(table[:, M].max()) if even_M else 0.0

    def sob(table, key, parity):
        k = indices[key][0 if parity == "even" else 1]
        return float(hermite_sobolev_norm(table, k, parity, d).max()) * c ** (-max(k, 0.0))

    A1 = th * top_even(lam_t) + math.sqrt(2.0) * (sob(lam_t, "k_t", "even") + sob(lam_t, "k_t", "odd"))
    A2 = th * top_even(lam) + math.sqrt(2.0) * (sob(lam, "k", "even") + sob(lam, "k", "odd"))
    nxt = float(lam_x[:, M + 1].max()) if lam_x.shape[1] > M + 1 else 0.0
    A3 = th * normA * top_even(lam_x) + math.sqrt(M + 1.0) * nxt + normA * sob(lam_x, "k_x", "even")
    proj = projection_error(S[-1], traj.mesh, M, delta)
    total = proj + T * (A1 + qn * A2 + A3)
    return {"total": total, "projection": proj, "A1": A1, "A2": A2, "A3": A3,
            "theta": th, "norm_A": normA, "norm_Q": qn}


@dataclass
class RateReport:
    k: tuple
    k_t: tuple
    k_x: tuple
    omega_pre: float
    omega_obs: float
    Ms: np.ndarray
    errors: np.ndarray
    omega_obs_odd: float = math.nan
    omega_obs_even: float = math.nan
    omega_theorem: float = math.nan
    reference: str = "moments"
    extra: dict = field(default_factory=dict)

    @property
    def delta(self):
        return self.omega_obs - self.omega_pre

    @classmethod
    def build(cls, series, Ms, errors, reference="moments", use_final=False):
        """Indices per parity from masked ``(N, N_t, N_x)`` and rates from ``E_M``."""
        idx = {}
        for s in series:
            idx[s.kind] = tuple(sobolev_index(decay_rate(s, p, use_final)) for p in ("even", "odd"))
        k, k_t, k_x = idx["N"], idx["N_t"], idx["N_x"]
        Ms = np.asarray(Ms)
        errors = np.asarray(errors, dtype=float)
        odd, even = Ms % 2 == 1, Ms % 2 == 0
        w_odd = observed_rate(Ms[odd], errors[odd]) if odd.sum() >= 3 else math.nan
        w_even = observed_rate(Ms[even], errors[even]) if even.sum() >= 3 else math.nan
        return cls(k, k_t, k_x, predicted_rate(k, k_t, k_x), observed_rate(Ms, errors), Ms, errors,
                   w_odd, w_even, theorem_rate(k, k_t, k_x), reference)

    def table1_rows(self):
        return [("N", *self.k), ("N_t", *self.k_t), ("N_x", *self.k_x)]

    def table2_rows(self):
        rows = [("all", self.omega_pre, self.omega_obs, self.delta)]
        for name, w in (("odd", self.omega_obs_odd), ("even", self.omega_obs_even)):
            rows.append((name, self.omega_pre, w, w - self.omega_pre))
        return rows
