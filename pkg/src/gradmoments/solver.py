"""DG(P1) + RK4 solver for the 1D moment system and a discrete-velocity reference.

Both solvers integrate a linear hyperbolic system ``u_t + J u_x = S u`` on a
uniform mesh. Per element the solution is ``u0 + u1 * sqrt(3) * s`` with
``s in [-1, 1]`` the local coordinate, so the mass matrix is ``h * I`` and
``||u||^2 = h * sum(u0^2 + u1^2)``.

The moment system differs from the DVM only through ``J`` (the Jacobi matrix
of the Hermite recursion versus ``diag(v)``), the collision source and the
boundary fluxes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
import logging
import math

import numpy as np

from .hermite import hermite_functions, jacobi_matrix
from .matrices import assemble, inflow_moments

__all__ = [
    "Mesh1D",
    "MomentField",
    "SolverConfig",
    "DVMConfig",
    "Trajectory",
    "NumericalAbort",
    "flux_jacobian",
    "upwind_flux",
    "boundary_flux",
    "semi_discrete_rhs",
    "rk4_step",
    "cfl_dt",
    "run",
    "dvm_run",
    "gaussian_density",
    "maxwellian_inflow",
]

log = logging.getLogger(__name__)

SQ3 = math.sqrt(3.0)


@dataclass(frozen=True)
class Mesh1D:
    n_elements: int
    x_lo: float = 0.0
    x_hi: float = 1.0

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("mesh needs at least one element")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty domain")

    @property
    def h(self):
        return (self.x_hi - self.x_lo) / self.n_elements

    @property
    def centers(self):
        return self.x_lo + self.h * (np.arange(self.n_elements) + 0.5)

    @property
    def edges(self):
        return np.linspace(self.x_lo, self.x_hi, self.n_elements + 1)

    def project(self, func, n_points=5):
        """L2 projection of ``func(x)`` onto P1; returns ``(mean, slope)`` per element.

        ``func`` may return trailing components; ``n_points``-point Gauss-Legendre.
        """
        s, w = np.polynomial.legendre.leggauss(n_points)
        x = self.centers[:, None] + 0.5 * self.h * s[None, :]
        vals = np.asarray(func(x), dtype=float)
        shape = (self.n_elements, n_points) + vals.shape[2:]
        vals = np.broadcast_to(vals, shape)
        # (1/2) int_{-1}^{1} phi_i v ds with phi = (1, sqrt3 s)
        mean = 0.5 * np.einsum("q,eq...->e...", w, vals)
        slope = 0.5 * np.einsum("q,eq...->e...", w * SQ3 * s, vals)
        return mean, slope


@dataclass
class MomentField:
    """P1 coefficients ``u[0]`` (means) and ``u[1]`` (slopes), shape ``(2, n_elements, n)``."""

    mesh: Mesh1D
    u: np.ndarray

    @property
    def n_components(self):
        return self.u.shape[-1]

    @property
    def M(self):
        return self.n_components - 1

    @classmethod
    def zeros(cls, mesh, n):
        return cls(mesh, np.zeros((2, mesh.n_elements, n)))

    def norm(self):
        """``||u||_{L^2(Omega; R^n)}``, equal to the ``L^2(Omega x R)`` norm of ``f_M``."""
        return math.sqrt(self.mesh.h * float(np.sum(self.u * self.u)))

    def component_norms(self):
        """Spatial L2 norm of every component."""
        return np.sqrt(self.mesh.h * np.sum(self.u * self.u, axis=(0, 1)))

    def traces(self):
        """Left and right element traces, each ``(n_elements, n)``."""
        return self.u[0] - SQ3 * self.u[1], self.u[0] + SQ3 * self.u[1]

    def evaluate(self, x):
        """Point values at ``x`` (array), shape ``x.shape + (n,)``."""
        x = np.asarray(x, dtype=float)
        m = self.mesh
        e = np.clip(((x - m.x_lo) / m.h).astype(int), 0, m.n_elements - 1)
        s = 2.0 * (x - m.centers[e]) / m.h
        return self.u[0][e] + SQ3 * s[..., None] * self.u[1][e]


def gaussian_density(center=0.5, sharpness=100.0):
    def rho(x):
        return np.exp(-sharpness * (x - center) ** 2)
    return rho


def maxwellian_inflow(rho=0.0, v=0.0, theta=0.0):
    """Linearised Maxwellian trace ``(rho + v xi + theta/2 (xi^2 - 1)) sqrt(f0)`` in 1D."""
    def f_in(xi):
        return (rho + v * xi + 0.5 * theta * (xi * xi - 1.0)) * hermite_functions(0, xi)[0]
    return f_in


@dataclass
class SolverConfig:
    M: int
    kn: float = 0.1
    n_elements: int = 200
    cfl: float = 0.5
    t_final: float = 0.3
    x_lo: float = 0.0
    x_hi: float = 1.0
    center: float = 0.5
    sharpness: float = 100.0
    initial_coeffs: tuple | None = None  # constant-in-x moments instead of the Gaussian
    inflow_left: tuple | None = None  # (rho, v, theta) of a Maxwellian wall, None = vacuum
    inflow_right: tuple | None = None
    snapshot_every: int = 10
    n_snapshots: int | None = None  # equal output intervals in time; overrides snapshot_every
    nan_check_every: int = 100

    def validate(self):
        if self.M < 0:
            raise ValueError("M must be non-negative")
        if not self.kn > 0:
            raise ValueError("Kn must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_final < 0:
            raise ValueError("final time must be non-negative")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        if self.n_snapshots is not None and self.n_snapshots < 1:
            raise ValueError("n_snapshots must be >= 1")
        Mesh1D(self.n_elements, self.x_lo, self.x_hi)
        return self

    @property
    def mesh(self):
        return Mesh1D(self.n_elements, self.x_lo, self.x_hi)

    def to_dict(self):
        return asdict(self)


@dataclass
class DVMConfig:
    n_velocities: int = 64
    v_max: float = 8.0
    allow_odd: bool = False

    def validate(self):
        if self.v_max < 5:
            raise ValueError("v_max must be >= 5 to cover the Maxwellian tails")
        if self.n_velocities < 2:
            raise ValueError("need at least two velocities")
        if self.n_velocities % 2 and not self.allow_odd:
            raise ValueError("odd velocity counts put a node at v = 0; set allow_odd")
        return self

    @property
    def nodes(self):
        dv = 2.0 * self.v_max / self.n_velocities
        return -self.v_max + dv * (np.arange(self.n_velocities) + 0.5)

    @property
    def dv(self):
        return 2.0 * self.v_max / self.n_velocities


class NumericalAbort(RuntimeError):
    """Non-finite values met during time stepping; carries the last finite state."""

    def __init__(self, message, last_good=None, step=None):
        super().__init__(message)
        self.last_good = last_good
        self.step = step


def flux_jacobian(M):
    """``(M+1) x (M+1)`` Jacobi matrix with ``J[k, k+1] = J[k+1, k] = sqrt(k+1)``."""
    if M < 0:
        raise ValueError("M must be non-negative")
    return jacobi_matrix(M + 1)


def _abs_matrix(J):
    lam, V = np.linalg.eigh(J)
    return (V * np.abs(lam)) @ V.T, float(np.abs(lam).max(initial=0.0))


def upwind_flux(a_left, a_right, J, absJ=None):
    """``F = J (aL + aR)/2 - |J| (aR - aL)/2``; states along the last axis."""
    if absJ is None:
        absJ = _abs_matrix(J)[0]
    a_left = np.asarray(a_left, dtype=float)
    a_right = np.asarray(a_right, dtype=float)
    return 0.5 * (a_left + a_right) @ J.T - 0.5 * (a_right - a_left) @ absJ.T


class _System:
    """Linear system ``u_t + J u_x = S u`` with fixed boundary closures."""

    def __init__(self, J, source, right_flux, left_flux):
        self.J = np.asarray(J, dtype=float)
        self.absJ, self.speed = _abs_matrix(self.J)
        self.source = source
        self.right_flux = right_flux
        self.left_flux = left_flux
        # J is tridiagonal (moments) or diagonal (DVM); apply it by bands
        J = self.J
        self._tri = not (np.any(np.triu(J, 2)) or np.any(np.tril(J, -2)))
        if self._tri:
            self._d0 = np.diag(J).copy()
            self._up = np.diag(J, 1).copy()
            self._lo = np.diag(J, -1).copy()
        absJ = self.absJ
        self._abs_diag = np.diag(absJ).copy() if not np.any(absJ - np.diag(np.diag(absJ))) else None

    def apply_J(self, x):
        """``x @ J.T`` along the last axis."""
        if not self._tri:
            return x @ self.J.T
        y = self._d0 * x
        y[..., :-1] += self._up * x[..., 1:]
        y[..., 1:] += self._lo * x[..., :-1]
        return y

    def apply_absJ(self, x):
        if self._abs_diag is not None:
            return self._abs_diag * x
        return x @ self.absJ.T

    def rhs(self, u, h):
        uL, uR = u[0] - SQ3 * u[1], u[0] + SQ3 * u[1]
        n_el = u.shape[1]
        F = np.empty((n_el + 1, u.shape[2]))
        if n_el > 1:
            a, b = uR[:-1], uL[1:]
            F[1:-1] = 0.5 * self.apply_J(a + b) - 0.5 * self.apply_absJ(b - a)
        F[0] = self.left_flux(uL[0])
        F[-1] = self.right_flux(uR[-1])
        du = np.empty_like(u)
        du[0] = -(F[1:] - F[:-1]) / h
        du[1] = (2.0 * SQ3 * self.apply_J(u[0]) - SQ3 * (F[1:] + F[:-1])) / h
        if self.source is not None:
            du += self.source(u)
        return du


def _bgk_source_1d(M, kn):
    if not math.isfinite(kn):
        return None
    if M < 2:
        raise ValueError("BGK collisions need M >= 2; use kn=inf for free transport")
    inv = 1.0 / kn

    def source(u):
        s = -inv * u
        s[..., :3] = 0.0
        return s
    return source


def boundary_flux(u_b, side, bc_map, g=None, J=None):
    """Weak wall flux ``J u_hat`` of the stable boundary condition.

    ``u_hat`` keeps the even moments of the trace and sets the odd ones to
    ``bc_map @ even + g``. The left wall is handled by conjugating with the
    parity reflection ``S = diag((-1)^k)``, since the construction assumes
    outgoing velocities ``xi > 0``.
    """
    u_b = np.asarray(u_b, dtype=float)
    n = u_b.shape[-1]
    M = n - 1
    if bc_map.shape != (n // 2, (n + 1) // 2):
        raise ValueError("boundary operator does not match the trace size")
    if J is None:
        J = flux_jacobian(M)
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    w = u_b if side == "right" else sign * u_b
    hat = np.array(w, copy=True)
    hat[..., 1::2] = w[..., 0::2] @ bc_map.T + (0.0 if g is None else g)
    F = hat @ J.T
    return F if side == "right" else -sign * F


def _moment_system(cfg):
    M = cfg.M
    J = flux_jacobian(M)
    if M == 0:
        # no odd moments: nothing reaches the wall
        def zero(u_b):
            return np.zeros_like(u_b)
        return _System(J, _bgk_source_1d(M, cfg.kn), zero, zero)
    bc_map = np.asarray(assemble(1, M).bc_map)
    g_r = None if cfg.inflow_right is None else inflow_moments(maxwellian_inflow(*cfg.inflow_right), M, "right")
    g_l = None if cfg.inflow_left is None else inflow_moments(maxwellian_inflow(*cfg.inflow_left), M, "left")

    def right(u_b):
        return boundary_flux(u_b, "right", bc_map, g_r, J)

    def left(u_b):
        return boundary_flux(u_b, "left", bc_map, g_l, J)

    return _System(J, _bgk_source_1d(M, cfg.kn), right, left)


def semi_discrete_rhs(field, config):
    """Time derivative of a :class:`MomentField` under the moment system of ``config``."""
    system = config if isinstance(config, _System) else _moment_system(config)
    return MomentField(field.mesh, system.rhs(field.u, field.mesh.h))


def rk4_step(u, dt, f):
    """Classical RK4 for ``u' = f(u)``."""
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


DG_ORDER = 1


def cfl_dt(mesh, M, cfl, order=DG_ORDER):
    """``cfl * h / ((2p + 1) lambda_max(J))`` with ``p`` the DG polynomial order.

    ``lambda_max`` is the largest root of ``He_{M+1}``. The ``2p + 1`` factor
    is the usual DG normalisation: P1 upwind DG with RK4 is stable up to
    ``dt * lambda_max / h ~ 0.47``, so with it every ``cfl <= 1`` is stable.
    """
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    lam = np.linalg.eigvalsh(flux_jacobian(M))[-1] if M > 0 else 0.0
    return math.inf if lam == 0 else cfl * mesh.h / ((2 * order + 1) * lam)


@dataclass
class Trajectory:
    mesh: Mesh1D
    times: np.ndarray
    snapshots: np.ndarray  # (n_snap, 2, n_elements, n)
    step_norms: np.ndarray  # norm after every step, index 0 = initial
    dt: float
    n_steps: int
    meta: dict = field(default_factory=dict)
    system: object = field(default=None, repr=False)

    def field(self, i=-1):
        return MomentField(self.mesh, self.snapshots[i])

    @property
    def final(self):
        return self.field(-1)

    def rhs(self, i=-1):
        """``d/dt`` of snapshot ``i`` from the semi-discrete operator."""
        return self.system.rhs(self.snapshots[i], self.mesh.h)

    @property
    def snapshot_norms(self):
        h = self.mesh.h
        return np.sqrt(h * np.sum(self.snapshots ** 2, axis=(1, 2, 3)))


def _integrate(system, u0, mesh, t_final, dt, snapshot_every, nan_every, meta, n_snapshots=None):
    if t_final == 0 or not math.isfinite(dt):
        n_steps = 0 if t_final == 0 else 1
    else:
        n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    if n_snapshots and n_steps:
        # round the step count up so that snapshots fall on t_final * k / n_snapshots
        snapshot_every = math.ceil(n_steps / n_snapshots)
        n_steps = snapshot_every * n_snapshots
    dt = t_final / n_steps if n_steps else 0.0
    h = mesh.h

    def f(u):
        return system.rhs(u, h)

    u = u0
    times, snaps = [0.0], [u.copy()]
    norms = np.empty(n_steps + 1)
    norms[0] = math.sqrt(h * float(np.sum(u * u)))
    last_good, last_step = u.copy(), 0
    for step in range(1, n_steps + 1):
        u = rk4_step(u, dt, f)
        norms[step] = math.sqrt(h * float(np.sum(u * u)))
        if step % nan_every == 0 or step == n_steps:
            if not np.all(np.isfinite(u)):
                raise NumericalAbort(f"non-finite state at step {step}", (last_step, last_good), step)
            last_good, last_step = u.copy(), step
        if step % snapshot_every == 0 or step == n_steps:
            times.append(step * dt)
            snaps.append(u.copy())
    return Trajectory(mesh, np.array(times), np.stack(snaps), norms, dt, n_steps, meta, system)


def _initial_moments(cfg, n):
    mesh = cfg.mesh
    u = np.zeros((2, mesh.n_elements, n))
    if cfg.initial_coeffs is not None:
        c = np.zeros(n)
        c[: len(cfg.initial_coeffs)] = cfg.initial_coeffs[:n]
        u[0] = c
    else:
        mean, slope = mesh.project(gaussian_density(cfg.center, cfg.sharpness))
        u[0, :, 0], u[1, :, 0] = mean, slope
    return u


def run(config):
    """Solve the moment system; snapshots every ``snapshot_every`` steps and at the end."""
    cfg = config.validate()
    mesh = cfg.mesh
    system = _moment_system(cfg)
    dt = cfl_dt(mesh, cfg.M, cfg.cfl)
    u0 = _initial_moments(cfg, cfg.M + 1)
    log.info("moment run M=%d Kn=%g elements=%d", cfg.M, cfg.kn, cfg.n_elements)
    return _integrate(system, u0, mesh, cfg.t_final, dt, cfg.snapshot_every,
                      cfg.nan_check_every, {"kind": "moments", "M": cfg.M}, cfg.n_snapshots)


class DVMGrid:
    """Velocity grid with the discrete equilibrium projector and moment extraction."""

    def __init__(self, dcfg):
        dcfg.validate()
        self.v = dcfg.nodes
        self.dv = dcfg.dv
        sq = hermite_functions(0, self.v)[0]
        # collision invariants sqrt(f0) * (1, v, v^2 - 1), orthonormalised in the discrete inner product
        basis = np.stack([sq, self.v * sq, (self.v ** 2 - 1.0) * sq], axis=1) * math.sqrt(self.dv)
        q, _ = np.linalg.qr(basis)
        self.P_eq = q @ q.T

    def psi(self, K):
        """``He_k(v_j) sqrt(f0(v_j))`` for ``k <= K``, shape ``(K+1, n_v)``."""
        return hermite_functions(K, self.v)

    def moments(self, f, K):
        """``lambda_k = sum_j dv psi_k(v_j) f_j``, velocity along the last axis."""
        return (np.asarray(f) * self.dv) @ self.psi(K).T

    def synthesize(self, coeffs):
        """Grid values of ``sum_k coeffs_k psi_k``."""
        coeffs = np.asarray(coeffs)
        return coeffs @ self.psi(coeffs.shape[-1] - 1)


def _dvm_system(cfg, grid):
    v = grid.v
    J = np.diag(v)
    pos, neg = np.maximum(v, 0.0), np.minimum(v, 0.0)
    f_r = np.zeros_like(v) if cfg.inflow_right is None else np.where(v < 0, maxwellian_inflow(*cfg.inflow_right)(v), 0.0)
    f_l = np.zeros_like(v) if cfg.inflow_left is None else np.where(v > 0, maxwellian_inflow(*cfg.inflow_left)(v), 0.0)

    def right(u_b):
        return pos * u_b + neg * f_r

    def left(u_b):
        return neg * u_b + pos * f_l

    source = None
    if math.isfinite(cfg.kn):
        inv = 1.0 / cfg.kn
        # symmetric projector acting on the velocity axis
        P = grid.P_eq

        def source(u):
            return inv * (u @ P - u)
    return _System(J, source, right, left)


def dvm_run(config, dvm_config=None):
    """Discrete-velocity solve sharing the mesh, time integrator and initial density.

    Unknowns are the values ``f(v_j)``; the initial state is
    ``rho_I(x) sqrt(f0(v_j))`` so that its only nonzero Hermite moment is ``lambda_0``.
    """
    cfg = config.validate()
    dcfg = dvm_config or DVMConfig()
    grid = DVMGrid(dcfg)
    mesh = cfg.mesh
    system = _dvm_system(cfg, grid)
    sq = hermite_functions(0, grid.v)[0]
    u0 = np.zeros((2, mesh.n_elements, len(grid.v)))
    if cfg.initial_coeffs is not None:
        u0[0] = grid.synthesize(np.asarray(cfg.initial_coeffs, dtype=float))
    else:
        mean, slope = mesh.project(gaussian_density(cfg.center, cfg.sharpness))
        u0[0], u0[1] = mean[:, None] * sq, slope[:, None] * sq
    dt = cfg.cfl * mesh.h / ((2 * DG_ORDER + 1) * float(np.abs(grid.v).max()))
    log.info("DVM run n_v=%d v_max=%g", len(grid.v), dcfg.v_max)
    traj = _integrate(system, u0, mesh, cfg.t_final, dt, cfg.snapshot_every,
                      cfg.nan_check_every, {"kind": "dvm", "n_velocities": dcfg.n_velocities,
                                            "v_max": dcfg.v_max}, cfg.n_snapshots)
    traj.meta["grid"] = grid
    return traj
