"""One test per acceptance criterion, at the stated tolerances."""
import math
import time

import numpy as np
import pytest

from gradmoments import hermite as hm
from gradmoments import kinetic as kin
from gradmoments import matrices as mx
from gradmoments import solver as sv


def _slope(Ms, values):
    return np.polyfit(np.log(np.asarray(Ms, float)), np.log(np.asarray(values, float)), 1)[0]


@pytest.mark.criterion(1, "bidiagonal solve has unit l2 norm for n <= 200")
def test_c01_bidiagonal_unit_norm():
    t0 = time.perf_counter()
    worst = max(abs(mx.bidiagonal_unit_norm_solve(n)[1] - 1.0) for n in range(1, 201))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-12, f"max | ||x|| - 1 | = {worst:.2e}"
    assert elapsed < 1.0, f"runtime {elapsed:.2f}s"


@pytest.mark.criterion(2, "half-space matrices are contractions, M, q <= 20, d in {1, 3}")
def test_c02_half_matrix_contraction():
    t0 = time.perf_counter()
    worst = 0.0
    for d in (1, 3):
        for M in range(1, 21):
            for q in range(0, 21):
                worst = max(worst, mx.spectral_norm(mx.half_matrix(d, M, q, sparse=True)))
    elapsed = time.perf_counter() - t0
    assert worst <= 1.0 + 1e-10, f"max norm {worst!r}"
    assert elapsed < 10.0, f"runtime {elapsed:.1f}s"


@pytest.mark.criterion(3, "flux norm grows like sqrt(M) on [10, 50]; inverse-flux columns orthonormal")
def test_c03_flux_norm_growth():
    t0 = time.perf_counter()
    orth = 0.0
    for d in (1, 3):
        for M in range(2, 21):
            X = mx.inverse_flux_columns(d, M)
            orth = max(orth, float(np.abs(X.T @ X - np.eye(X.shape[1])).max(initial=0.0)))
    Ms = np.arange(10, 51)
    slopes = {d: _slope(Ms, [mx.spectral_norm(mx.flux_matrix(d, int(M), sparse=True)) for M in Ms])
              for d in (1, 3)}
    elapsed = time.perf_counter() - t0
    assert orth < 1e-10, f"||X^T X - I|| = {orth:.2e}"
    assert elapsed < 30.0, f"runtime {elapsed:.1f}s"
    for d, s in slopes.items():
        assert abs(s - 0.5) <= 0.05, f"d={d}: growth exponent {s:.4f}, expected 0.50 +- 0.05"


@pytest.mark.criterion(4, "Onsager matrix symmetric positive definite, M <= 20, d in {1, 3}")
def test_c04_onsager_spd():
    sym, mineig = 0.0, math.inf
    for d in (1, 3):
        for M in range(1, 21):
            R = mx.assemble(d, M).R
            sym = max(sym, float(np.abs(R - R.T).max()))
            mineig = min(mineig, float(np.linalg.eigvalsh(0.5 * (R + R.T)).min()))
    assert sym < 1e-10, f"symmetry residual {sym:.2e}"
    assert mineig > 0, f"min eigenvalue {mineig:.3e}"


@pytest.mark.criterion(5, "boundary difference lives in the top block; Theta grows like sqrt(M)")
def test_c05_boundary_difference():
    lower = max(mx.assemble(d, M).lower_block_residual for d in (1, 3) for M in range(1, 21))
    assert lower < 1e-10, f"lower-block residual {lower:.2e}"
    Ms = np.arange(10, 51, 2)  # odd M have no top even block, Theta = 0 there
    s = _slope(Ms, [mx.theta(1, int(M)) for M in Ms])
    assert abs(s - 0.5) <= 0.1, f"Theta growth exponent {s:.4f}"


@pytest.mark.criterion(6, "discrete L2 stability of the vacuum run")
def test_c06_vacuum_stability():
    t0 = time.perf_counter()
    for M in (3, 5, 10, 20):
        tr = sv.run(sv.SolverConfig(M=M, kn=0.1, n_elements=200, cfl=0.5, t_final=0.3, snapshot_every=10))
        n = tr.step_norms
        growth = float(np.max((n[1:] - n[:-1]) / n[:-1]))
        assert growth <= 1e-8, f"M={M}: relative growth {growth:.2e} per step"
        sn = tr.snapshot_norms
        assert np.all(sn[1:] <= sn[:-1] * (1 + 1e-8 * tr.n_steps))
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"runtime {elapsed:.1f}s"


@pytest.mark.criterion(7, "desk-scale observed rate 1.16 +- 0.20 and rate gap in [0, 0.4]")
def test_c07_desk_rates(desk_study):
    rep = desk_study.report
    assert desk_study.timings["total"] < 15 * 60
    assert abs(rep.omega_obs - 1.16) <= 0.20, f"omega_obs = {rep.omega_obs:.3f}"
    assert 0.0 <= rep.delta <= 0.4, (f"delta = {rep.delta:.3f} (omega_obs {rep.omega_obs:.3f}, "
                                     f"omega_pre {rep.omega_pre:.3f})")


@pytest.mark.criterion(8, "desk-scale Sobolev indices k 1.8, k_t 1.45, k_x 1.47 within 0.3")
def test_c08_desk_indices(desk_study):
    rep = desk_study.report
    bad = []
    for name, got, want in (("k", rep.k, 1.8), ("k_t", rep.k_t, 1.45), ("k_x", rep.k_x, 1.47)):
        for parity, v in zip(("even", "odd"), got):
            if abs(v - want) > 0.3:
                bad.append(f"{name}^{parity}={v:.3f} (want {want})")
    assert not bad, "; ".join(bad)


@pytest.mark.criterion(9, "DVM reference gives the same observed rate within 0.05")
def test_c09_dvm_cross_check(desk_study):
    a, b = desk_study.report.omega_obs, desk_study.dvm_report.omega_obs
    assert desk_study.config.n_velocities == 64 and desk_study.config.v_max == 8.0
    assert abs(a - b) <= 0.05, f"moments {a:.3f} vs DVM {b:.3f}"


@pytest.mark.criterion(10, "property suite")
def test_c10_orthonormality():
    for d, M in ((1, 20), (2, 20), (3, 20)):
        t = hm.enumerate_indices(d, M)
        rule = hm.tensor_rule(M + 2, d)
        psi = np.stack([hm.basis_eval(t, i, rule.nodes) for i in range(t.size)])
        G = (psi * rule.weights) @ psi.T
        err = float(np.abs(G - np.eye(t.size)).max())
        assert err < 1e-10, f"d={d}: Gram error {err:.2e}"


@pytest.mark.criterion(10, "property suite")
def test_c10_bgk_semidefinite_self_adjoint():
    rng = np.random.default_rng(2024)
    for d, M in ((1, 20), (3, 6)):
        op = kin.BGKOperator(d, M, 0.1)
        n = hm.enumerate_indices(d, M).size
        a, b = rng.standard_normal((2, 1000, n))
        Qa, Qb = op(a), op(b)
        assert np.max(np.sum(a * Qa, axis=1)) <= 1e-12
        assert np.max(np.abs(np.sum(b * Qa, axis=1) - np.sum(a * Qb, axis=1))) < 1e-12


@pytest.mark.criterion(10, "property suite")
@pytest.mark.parametrize("M", [3, 5, 10, 20])
def test_c10_equilibrium_preserved(M):
    state = (0.7, 0.2, 0.3)
    cfg = sv.SolverConfig(M=M, kn=0.1, n_elements=20, initial_coeffs=(0.7, 0.2, 0.3 / math.sqrt(2)),
                          inflow_left=state, inflow_right=state)
    system = sv._moment_system(cfg)
    h = cfg.mesh.h
    u0 = sv._initial_moments(cfg, M + 1)
    dt = sv.cfl_dt(cfg.mesh, M, cfg.cfl)
    u = u0.copy()
    for _ in range(100):
        u = sv.rk4_step(u, dt, lambda v: system.rhs(v, h))
    drift = float(np.abs(u - u0).max())
    assert drift < 1e-12, f"M={M}: drift {drift:.2e}"


@pytest.mark.criterion(10, "property suite")
def test_c10_upwind_consistency():
    rng = np.random.default_rng(5)
    for M in (1, 4, 9, 20):
        J = sv.flux_jacobian(M)
        a = rng.standard_normal(M + 1)
        assert np.array_equal(sv.upwind_flux(a, a, J), J @ a)


@pytest.mark.criterion(10, "property suite")
def test_c10_rk4_order():
    cfg = sv.SolverConfig(M=5, n_elements=40, sharpness=30, t_final=0.1)
    system = sv._moment_system(cfg)
    h = cfg.mesh.h
    u0 = sv._initial_moments(cfg, 6)
    T = 0.1

    def integrate(n):
        u = u0.copy()
        for _ in range(n):
            u = sv.rk4_step(u, T / n, lambda v: system.rhs(v, h))
        return u

    ref = integrate(2560)
    ns = np.array([40, 80, 160, 320])
    err = [math.sqrt(h * np.sum((integrate(int(n)) - ref) ** 2)) for n in ns]
    slope = np.polyfit(np.log(T / ns), np.log(err), 1)[0]
    assert abs(slope - 4.0) <= 0.1, f"slope {slope:.3f}"


@pytest.mark.criterion(11, "error bound holds for every swept M")
def test_c11_error_bound(desk_study):
    rep = desk_study.report
    for M, err, b in zip(rep.Ms, rep.errors, desk_study.bounds):
        assert err <= b["total"], f"M={M}: ||E_M|| = {err:.3e} > bound {b['total']:.3e}"


@pytest.mark.criterion(12, "Q-seminorm error integral decays at twice the observed rate")
def test_c12_q_diagnostic(desk_study):
    q, w = desk_study.q_rate, desk_study.report.omega_obs
    assert abs(q - 2 * w) <= 0.4, f"q rate {q:.3f} vs 2 omega_obs {2 * w:.3f}"
