import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e as npherm

from gradmoments import hermite as hm


def _oracle_he(k, x):
    # numpy's probabilists' Hermite series, normalised by sqrt(k!)
    c = np.zeros(k + 1)
    c[k] = 1.0
    return npherm.hermeval(x, c) / math.sqrt(math.factorial(k))


@pytest.mark.parametrize("k,x,expected", [
    (0, 3.7, 1.0),
    (1, 2.0, 2.0),
    (2, 1.0, 0.0),
    (3, 0.0, 0.0),
])
def test_hermite_eval_examples(k, x, expected):
    assert hm.hermite_eval(k, x) == pytest.approx(expected, abs=1e-15)


def test_he2_closed_form():
    x = np.linspace(-3, 3, 13)
    assert np.allclose(hm.hermite_eval(2, x), (x * x - 1) / math.sqrt(2), atol=1e-14)


def test_against_numpy_hermite_e():
    x = np.linspace(-4, 4, 17)
    H = hm.hermite_all(15, x)
    for k in range(16):
        assert np.allclose(H[k], _oracle_he(k, x), rtol=1e-12, atol=1e-12)


def test_no_overflow_at_degree_200():
    H = hm.hermite_all(200, np.array([0.0, 5.0, 15.0]))
    assert np.all(np.isfinite(H))


def test_enumerate_1d():
    t = hm.enumerate_indices(1, 4)
    assert [t.n(m) for m in range(5)] == [1, 1, 1, 1, 1]
    assert list(np.flatnonzero(t.odd)) == [1, 3]
    assert list(t.select("even")) == [0, 2, 4]


def test_enumerate_3d_counts():
    t = hm.enumerate_indices(3, 2)
    assert [t.n(m) for m in range(3)] == [1, 3, 6]
    for m in range(3):
        assert t.n(m) == (m + 1) * (m + 2) // 2


def test_enumerate_3d_brute_force():
    # oracle: every triple with sum <= 4, compared as sets per degree
    t = hm.enumerate_indices(3, 4)
    for m in range(5):
        brute = {(a, b, m - a - b) for a in range(m + 1) for b in range(m + 1 - a)}
        got = {tuple(int(v) for v in t.indices[i]) for i in range(t.size) if t.degree[i] == m}
        assert got == brute


def test_ones_count_in_first_component():
    # number of odd-degree indices of degree k whose first component equals one
    t = hm.enumerate_indices(3, 3)
    for k in (1, 3):
        ones = int(np.sum(t.beta1_odd(k) == 1))
        assert ones == k


def test_degree_major_order():
    t = hm.enumerate_indices(2, 5)
    assert np.all(np.diff(t.degree) >= 0)


@pytest.mark.parametrize("beta,xi,expected", [
    ((0, 0, 0), (0.3, -2.0, 7.0), 1.0),
    ((1, 1, 0), (2.0, 3.0, 5.0), 6.0),
])
def test_basis_eval_examples(beta, xi, expected):
    t = hm.enumerate_indices(3, 2)
    assert hm.basis_eval(t, t.position(beta), np.array(xi)) == pytest.approx(expected, abs=1e-14)


def test_basis_eval_1d_degree2_at_zero():
    t = hm.enumerate_indices(1, 2)
    assert hm.basis_eval(t, 2, np.array([0.0])) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


def test_gauss_rule_small():
    r1 = hm.gauss_hermite_rule(1)
    assert np.allclose(r1.nodes, [0.0]) and np.allclose(r1.weights, [1.0])
    r2 = hm.gauss_hermite_rule(2)
    assert np.allclose(np.sort(r2.nodes), [-1.0, 1.0], atol=1e-14)
    assert np.allclose(r2.weights, [0.5, 0.5], atol=1e-14)


def test_gauss_rule_matches_numpy():
    # numpy's hermegauss uses the weight exp(-x^2/2) without the 1/sqrt(2 pi)
    x, w = npherm.hermegauss(30)
    r = hm.gauss_hermite_rule(30)
    assert np.allclose(np.sort(r.nodes), x, atol=1e-12)
    assert np.allclose(r.weights[np.argsort(r.nodes)], w / math.sqrt(2 * math.pi), atol=1e-14)


def test_gauss_rule_moments():
    r = hm.gauss_hermite_rule(12)
    # E[x^2k] = (2k-1)!! for the standard normal
    for k in range(12):
        assert r.integrate(r.nodes ** (2 * k)) == pytest.approx(float(np.prod(np.arange(2 * k - 1, 0, -2))), rel=1e-12)


@pytest.mark.parametrize("d,M", [(1, 20), (2, 10), (3, 6)])
def test_orthonormality(d, M):
    t = hm.enumerate_indices(d, M)
    rule = hm.tensor_rule(M + 2, d)
    psi = np.stack([hm.basis_eval(t, i, rule.nodes) for i in range(t.size)])
    G = (psi * rule.weights) @ psi.T
    assert np.abs(G - np.eye(t.size)).max() < 1e-10


def test_recursion_residual_at_nodes():
    rule = hm.gauss_hermite_rule(20)
    H = hm.hermite_all(201, rule.nodes)
    i = np.arange(1, 201)[:, None]
    x = rule.nodes[None, :]
    res = np.abs(np.sqrt(i + 1) * H[2:] + np.sqrt(i) * H[:200] - x * H[1:201])
    assert (res / (1 + np.abs(H[1:201] * x))).max() < 1e-10


def test_jacobi_matrix_is_flux_jacobian_shape():
    J = hm.jacobi_matrix(4)
    assert np.allclose(np.diag(J, 1), np.sqrt([1, 2, 3]))
    assert np.allclose(J, J.T)


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
def test_parity_flip(x1, x2, x3):
    t = hm.enumerate_indices(3, 4)
    xi = np.array([x1, x2, x3])
    flip = xi * np.array([-1.0, 1.0, 1.0])
    for i in range(t.size):
        s = -1.0 if t.odd[i] else 1.0
        assert hm.basis_eval(t, i, flip) == pytest.approx(s * hm.basis_eval(t, i, xi), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30), st.floats(-6, 6))
def test_hermite_parity_property(k, x):
    assert hm.hermite_eval(k, -x) == pytest.approx((-1) ** k * hm.hermite_eval(k, x), rel=1e-12, abs=1e-12)
