import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradmoments import analysis as an
from gradmoments import solver as sv


def _traj(**kw):
    base = dict(M=7, n_elements=40, t_final=0.1, n_snapshots=5)
    base.update(kw)
    return sv.run(sv.SolverConfig(**base))


# -- error norms ----------------------------------------------------------------------

def test_l2_error_trivial():
    tr = _traj()
    u = tr.snapshots[-1]
    assert an.l2_error(u, u, tr.mesh.h) == 0.0
    assert an.l2_error(u, np.zeros_like(u[..., :1]), tr.mesh.h) == pytest.approx(tr.snapshot_norms[-1], rel=1e-14)


def test_l2_error_hand_example():
    # two elements of width 1/2, lambda_0 = 1 + sqrt(3) * 0.5 * s on the first; integral of the square by hand
    mesh = sv.Mesh1D(2)
    ref = np.zeros((2, 2, 3))
    ref[0, 0, 0], ref[1, 0, 0] = 1.0, 0.5
    exact = 0.5 * 0.5 * (2.0 + 2.0 * 3.0 * 0.25 / 3.0)  # h/2 * int_{-1}^{1} (1 + sqrt(3)/2 s)^2 ds
    assert an.l2_error(ref, np.zeros((2, 2, 1)), mesh.h) == pytest.approx(math.sqrt(exact), rel=1e-15)


def test_l2_error_mesh_mismatch():
    with pytest.raises(ValueError):
        an.l2_error(np.zeros((2, 3, 4)), np.zeros((2, 4, 4)), 0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_l2_error_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((2, 5, n)) for n in (6, 4, 3))
    h = 0.2
    d_ab, d_bc, d_ac = an.l2_error(a, b, h), an.l2_error(b, c, h), an.l2_error(a, c, h)
    assert d_ab >= 0 and an.l2_error(a, a, h) == 0
    assert d_ab == pytest.approx(an.l2_error(b, a, h))
    assert d_ac <= d_ab + d_bc + 1e-12


def test_l2_error_parseval_tail():
    rng = np.random.default_rng(0)
    ref = rng.standard_normal((2, 4, 9))
    approx = rng.standard_normal((2, 4, 5))
    h = 0.25
    d = ref.copy()
    d[..., :5] -= approx
    assert an.l2_error(ref, approx, h) ** 2 == pytest.approx(h * np.sum(d * d))


# -- decay series ---------------------------------------------------------------------

def test_decay_of_steady_equilibrium():
    state = (0.6, 0.1, 0.2)
    tr = _traj(M=5, initial_coeffs=(0.6, 0.1, 0.2 / math.sqrt(2)), inflow_left=state, inflow_right=state)
    N, Nt, Nx = an.moment_decay(tr)
    assert Nt.values.max() < 1e-12
    assert Nx.values.max() < 1e-11  # round-off of the steady state, amplified by 1/h
    assert N.values[0] == pytest.approx(0.6)


def test_decay_series_shapes_and_final():
    tr = _traj()
    N, Nt, Nx = an.moment_decay(tr)
    assert len(N.values) == 8 and np.all(N.values >= N.final - 1e-15)
    assert N.kind == "N" and Nt.kind == "N_t" and Nx.kind == "N_x"


def test_filter_artefacts_rules():
    a = an.DecaySeries("N", np.array([1.0, 0.5, 0.2, 1e-14]), np.zeros(4))
    assert list(an.filter_artefacts(a, a)) == [True, True, True, False]
    b = an.DecaySeries("N", np.array([1.0, 0.55, 0.2]), np.zeros(3))
    assert list(an.filter_artefacts(a, b)) == [True, False, True, False]


def test_points_by_parity():
    s = an.DecaySeries("N", np.arange(1.0, 9.0), np.zeros(8), mask=np.array([1, 1, 1, 1, 0, 1, 1, 1], bool))
    m, v = s.points("odd")
    assert list(m) == [1, 3, 5, 7]
    m, v = s.points("even")
    assert list(m) == [2, 6]


# -- slopes and rates -----------------------------------------------------------------

def test_fit_slope_exact():
    m = np.arange(1, 40)
    assert an.fit_slope(m, m ** -2.0) == pytest.approx(-2.0, abs=1e-12)
    assert an.fit_slope(m, np.full(len(m), 3.0)) == pytest.approx(0.0, abs=1e-12)


def test_fit_slope_noisy():
    rng = np.random.default_rng(7)
    m = np.arange(1, 61)
    for s in (0.8, 1.6, 2.3):
        v = m ** (-s) * (1 + 0.01 * rng.standard_normal(len(m)))
        assert abs(an.fit_slope(m, v) + s) < 0.05


def test_fit_slope_errors():
    with pytest.raises(ValueError):
        an.fit_slope([2.0, 2.0], [1.0, 3.0])
    with pytest.raises(ValueError):
        an.fit_slope([1.0], [1.0])
    with pytest.raises(ValueError):
        an.fit_slope([1.0, 2.0], [1.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 4), st.floats(0.1, 10))
def test_fit_slope_power_law_property(p, c):
    m = np.arange(1, 30, dtype=float)
    assert abs(an.fit_slope(m, c * m ** p) - p) < 1e-12


@pytest.mark.parametrize("s,k", [(2.3, 1.8), (1.95, 1.45), (0.5, 0.0)])
def test_sobolev_index(s, k):
    assert an.sobolev_index(s) == pytest.approx(k)


def test_predicted_rate_examples():
    assert an.predicted_rate(1.8, 1.45, 1.47) == pytest.approx(0.97)
    assert an.predicted_rate(50.0, 60.0, 1.5) == pytest.approx(1.0)
    assert an.theorem_rate(1.8, 1.45, 1.47) == pytest.approx(0.47)


def test_predicted_rate_parity_pairs():
    assert an.predicted_rate((1.8, 1.7), (1.45, 1.5), (1.47, 1.6)) == pytest.approx(0.97)
    assert an.theorem_rate((2.0, 2.0), (2.0, 2.0), (1.47, 3.0)) == pytest.approx(0.47)
    assert an.theorem_rate((2.0, 2.0), (2.0, 2.0), (3.0, 1.2)) == pytest.approx(0.7)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 5), st.floats(0, 1))
def test_predicted_rate_properties(a, b, c, bump):
    base = an.predicted_rate(a, b, c)
    # the min over {k, k_t, k_x - 1/2} does not depend on the order of its arguments
    vals = [a, b, c - 0.5]
    for p in itertools.permutations(vals):
        assert min(p) == pytest.approx(base)
    assert an.predicted_rate(a + bump, b, c) >= base
    assert an.predicted_rate(a, b + bump, c) >= base
    assert an.predicted_rate(a, b, c + bump) >= base


def test_observed_rate():
    Ms = np.arange(5, 45, 5)
    assert an.observed_rate(Ms, Ms ** -1.16) == pytest.approx(1.16, abs=1e-12)
    assert an.observed_rate(Ms, np.full(len(Ms), 0.3)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        an.observed_rate([5], [0.1])
    with pytest.raises(ValueError):
        an.observed_rate([5, 10], [0.1, 0.05])


def test_rate_report_build_synthetic():
    m = np.arange(0, 61, dtype=float)
    mk = lambda kind, s: an.DecaySeries(kind, np.r_[1.0, m[1:] ** -s], np.zeros(61), np.ones(61, bool))
    series = (mk("N", 2.3), mk("N_t", 1.95), mk("N_x", 1.97))
    Ms = np.arange(5, 45, 5)
    rep = an.RateReport.build(series, Ms, Ms ** -1.16)
    assert rep.k == pytest.approx((1.8, 1.8))
    assert rep.omega_pre == pytest.approx(0.97)
    assert rep.omega_obs == pytest.approx(1.16)
    assert rep.delta == pytest.approx(0.19)
    assert rep.omega_obs_odd == pytest.approx(1.16) and rep.omega_obs_even == pytest.approx(1.16)
    assert [r[0] for r in rep.table2_rows()] == ["all", "odd", "even"]


# -- projections, Q seminorm, bound ----------------------------------------------------

def test_bc_projection_interior_is_orthogonal():
    tr = _traj(M=9)
    u = tr.snapshots[-1]
    proj, w = an.bc_projection_field(u, tr.mesh, 5, delta=0.2)
    assert w.sum() == pytest.approx(1.0)
    s = np.polynomial.legendre.leggauss(3)[0]
    vals = an._point_values(u, s)[..., :6]
    x = tr.mesh.centers
    inner = (x > 0.25) & (x < 0.75)
    assert np.array_equal(proj[inner], vals[inner])


def test_bc_projection_at_wall_satisfies_boundary_condition():
    from gradmoments.kinetic import bc_project
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((1, 1, 12))
    right, left = an._bc_project_points(vals, 5)
    assert np.allclose(right[0, 0], bc_project(vals[0, 0], 5), atol=1e-13)
    S = (-1.0) ** np.arange(12)
    assert np.allclose(left[0, 0], S[:6] * bc_project(S * vals[0, 0], 5), atol=1e-13)


def test_q_seminorm_history_zero_cases():
    # an odd M_ref in 1D has no degree-M even block, so the projection of f_ref onto itself is exact
    tr = _traj(M=7)
    hist, total = an.q_seminorm_history(tr, tr, 0.1)
    assert np.abs(hist).max() < 1e-30 and total < 1e-30
    # an error made only of equilibrium moments is invisible to Q
    ref = _traj(M=7, initial_coeffs=(0.5, 0.2, 0.1), inflow_left=(0.5, 0.2, 0.1 * math.sqrt(2)),
                inflow_right=(0.5, 0.2, 0.1 * math.sqrt(2)))
    zero = _traj(M=7, initial_coeffs=(0.0,))
    h2, _ = an.q_seminorm_history(ref, zero, 0.1)
    assert np.abs(h2).max() < 1e-20


def test_q_seminorm_history_snapshot_mismatch():
    with pytest.raises(ValueError):
        an.q_seminorm_history(_traj(n_snapshots=5), _traj(M=4, n_snapshots=4), 0.1)


def test_hermite_sobolev_norm():
    norms = np.array([1.0, 0.5, 0.25])
    assert an.hermite_sobolev_norm(norms, 0.0) == pytest.approx(math.sqrt(1 + 0.25 + 0.0625))
    assert an.hermite_sobolev_norm(norms, 1.0, "odd") == pytest.approx(3 * 0.5)


def test_error_bound_holds_small_case():
    ref = _traj(M=31, n_elements=60, t_final=0.1, n_snapshots=10)
    N, Nt, Nx = an.moment_decay(ref)
    rep = an.RateReport.build((N, Nt, Nx), [5, 7, 9], [1, 1, 1])
    idx = {"k": rep.k, "k_t": rep.k_t, "k_x": rep.k_x}
    for M in (5, 8, 11):
        tr = _traj(M=M, n_elements=60, t_final=0.1, n_snapshots=10)
        err = an.l2_error(ref.snapshots[-1], tr.snapshots[-1], ref.mesh.h)
        b = an.error_bound_rhs(ref, M, idx, 0.1)
        assert err <= b["total"]
        assert b["total"] >= b["projection"] >= 0
