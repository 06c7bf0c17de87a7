"""Property suites behind ``gradmoments validate``.

Each check returns a :class:`Check`; a suite is a list of checks. The suites
read the live module state, so a corrupted seed or matrix shows up by name.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import hermite as hm
from . import kinetic as kin
from . import matrices as mx
from . import solver as sv

__all__ = ["Check", "SUITES", "run_suites"]


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.suite}.{self.name}: {self.detail}"


def _check(suite, name, value, limit, fmt="{:.3e}"):
    ok = bool(np.isfinite(value) and value < limit)
    return Check(suite, name, ok, f"{fmt.format(value)} < {limit:g}")


def suite_hermite():
    out = []
    worst = 0.0
    for d in (1, 2, 3):
        M = 20 if d == 1 else (10 if d == 2 else 6)
        table = hm.enumerate_indices(d, M)
        rule = hm.tensor_rule(M + 2, d)
        psi = np.stack([hm.basis_eval(table, i, rule.nodes) for i in range(table.size)])
        G = (psi * rule.weights) @ psi.T
        worst = max(worst, float(np.abs(G - np.eye(table.size)).max()))
    out.append(_check("hermite", "orthonormality", worst, 1e-10))
    i = np.arange(1, 201)[:, None]
    for n, name in ((20, "recursion_residual"), (64, "recursion_residual_wide")):
        rule = hm.gauss_hermite_rule(n)
        H = hm.hermite_all(201, rule.nodes)
        x = rule.nodes[None, :]
        terms = (np.sqrt(i + 1) * H[2:202], np.sqrt(i) * H[:200], x * H[1:201])
        res = np.abs(terms[0] + terms[1] - terms[2])
        if n == 20:
            out.append(_check("hermite", name, float((res / (1 + np.abs(terms[2]))).max()), 1e-10))
        else:
            # far out the He_{i-1} term dominates, so scale by the largest term
            scale = 1 + np.maximum.reduce([np.abs(t) for t in terms])
            out.append(_check("hermite", name, float((res / scale).max()), 1e-14))
    table = hm.enumerate_indices(3, 5)
    xi = np.array([0.7, -1.3, 0.4])
    flip = xi * np.array([-1, 1, 1])
    bad = sum(
        not math.isclose(hm.basis_eval(table, k, flip), (-1 if table.odd[k] else 1) * hm.basis_eval(table, k, xi),
                         rel_tol=0, abs_tol=1e-12)
        for k in range(table.size))
    out.append(Check("hermite", "parity", bad == 0, f"{bad} sign mismatches"))
    return out


def suite_matrices():
    out = []
    worst_h = 0.0
    from scipy.integrate import quad
    for i in range(8):
        for j in range(8):
            f = lambda x: hm.hermite_eval(i, x) * hm.hermite_eval(j, x) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
            ref = quad(f, 0.0, 40.0, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
            worst_h = max(worst_h, abs(mx.half_range_integral(i, j) - ref))
    out.append(_check("matrices", "half_range_vs_quadrature", worst_h, 1e-12))
    worst_b = 0.0
    for d in (1, 3):
        for M in range(1, 21 if d == 1 else 9):
            for q in range(0, 21 if d == 1 else 9):
                worst_b = max(worst_b, mx.spectral_norm(mx.half_matrix(d, M, q)))
    out.append(_check("matrices", "half_matrix_norm_le_1", worst_b - 1.0, 1e-10))
    sym, mineig = 0.0, np.inf
    for d in (1, 3):
        for M in range(1, 21 if d == 1 else 9):
            R = mx.assemble(d, M).R
            sym = max(sym, float(np.linalg.norm(R - R.T, 2) / np.linalg.norm(R, 2)))
            mineig = min(mineig, float(np.linalg.eigvalsh(0.5 * (R + R.T)).min()))
    out.append(_check("matrices", "onsager_symmetry", sym, 1e-10))
    out.append(Check("matrices", "onsager_positive", mineig > 0, f"min eigenvalue {mineig:.3e} > 0"))
    lower = max(mx.assemble(d, M).lower_block_residual for d in (1, 3) for M in range(1, 13 if d == 1 else 7))
    out.append(_check("matrices", "boundary_lower_blocks", lower, 1e-10))
    c1 = max(abs(mx.bidiagonal_unit_norm_solve(n)[1] - 1.0) for n in range(1, 201))
    out.append(_check("matrices", "bidiagonal_unit_norm", c1, 1e-12))
    orth = 0.0
    for d in (1, 3):
        for M in range(2, 21 if d == 1 else 9):
            X = mx.inverse_flux_columns(d, M)
            orth = max(orth, float(np.abs(X.T @ X - np.eye(X.shape[1])).max(initial=0.0)))
    out.append(_check("matrices", "inverse_flux_columns_orthonormal", orth, 1e-10))
    rep = mx.validate_flux_blocks(3, 5)
    failed = [k for k, v in rep.items() if k != "details" and not v]
    out.append(Check("matrices", "flux_block_structure", not failed, "all claims hold" if not failed else f"failed: {failed}"))
    res = mx.half_space_identity_check(6, 40, [0.0, 1.0])
    out.append(_check("matrices", "half_space_identity", res, 1e-10))
    return out


def suite_kinetic(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    nsd, adj = -np.inf, 0.0
    for M in (2, 5, 10, 20):
        op = kin.BGKOperator(1, M, 0.3)
        a = rng.standard_normal((250, M + 1))
        b = rng.standard_normal((250, M + 1))
        nsd = max(nsd, float(np.max(np.sum(a * op(a), axis=1))))
        adj = max(adj, float(np.max(np.abs(np.sum(b * op(a), axis=1) - np.sum(a * op(b), axis=1)))))
    out.append(Check("kinetic", "negative_semidefinite", nsd <= 1e-12, f"max <a, Qa> = {nsd:.3e} <= 1e-12"))
    out.append(_check("kinetic", "self_adjoint", adj, 1e-12))
    op = kin.BGKOperator(1, 8, 1.0)
    Q = op(np.eye(9))
    kdim = int(np.sum(np.abs(np.linalg.eigvalsh(Q)) < 1e-12))
    out.append(Check("kinetic", "kernel_dimension", kdim == 3, f"dim ker Q = {kdim} (expected 3)"))
    return out


def suite_solver():
    out = []
    J = sv.flux_jacobian(6)
    a = np.linspace(-1, 1, 7)
    cons = float(np.abs(sv.upwind_flux(a, a, J) - J @ a).max())
    out.append(Check("solver", "upwind_consistency", cons == 0.0, f"|F(a,a) - Ja| = {cons:.1e} == 0"))
    worst = -np.inf
    for M in (3, 5, 10):
        tr = sv.run(sv.SolverConfig(M=M, n_elements=50, t_final=0.1, snapshot_every=10 ** 6))
        n = tr.step_norms
        worst = max(worst, float(np.max((n[1:] - n[:-1]) / n[:-1])))
    out.append(Check("solver", "l2_stability", worst <= 1e-8, f"max relative growth per step {worst:.3e} <= 1e-8"))
    cfg = sv.SolverConfig(M=6, n_elements=8, initial_coeffs=(0.7, -0.2, 0.3), t_final=1.0, snapshot_every=10 ** 6)
    system = sv._moment_system(cfg)
    u = sv._initial_moments(cfg, 7)
    # homogeneous equilibrium on a periodic-free mesh only stays put in the interior; check the source alone
    drift = float(np.abs(system.source(u)).max())
    out.append(_check("solver", "equilibrium_source_zero", drift + 1e-300, 1e-12))
    return out


SUITES = {
    "hermite": suite_hermite,
    "matrices": suite_matrices,
    "kinetic": suite_kinetic,
    "solver": suite_solver,
}


def run_suites(names=None):
    names = list(SUITES) if not names else names
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}")
    checks = []
    for n in names:
        try:
            checks.extend(SUITES[n]())
        except Exception as exc:  # a crash is a failure of that suite
            checks.append(Check(n, "suite_error", False, f"{type(exc).__name__}: {exc}"))
    return checks
