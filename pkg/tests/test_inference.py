"""Sandwich covariance pieces: Hessian, score weight, and assembly."""

import numpy as np
import pytest

from bincalib import (AsymptoticReport, BoundaryWarning, Domain, InputError,
                      NumericalError, estimate_V, estimate_W, sandwich,
                      unit_domain)


def _nodes(M=400, seed=0, d=1):
    return np.random.default_rng(seed).uniform(size=(M, d))


def _linear_gap(c):
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5 + c * (float(theta[0]) - 0.5))

    return eta, p


def test_linear_gap_matches_closed_form():
    # gap = c (theta - 0.5): V = 2 c^2, W = c^2 / 4, se = 1 / (2 c sqrt(n))
    c = 0.8
    eta, p = _linear_gap(c)
    quad = _nodes()
    V = estimate_V(eta, p, np.array([0.5]), quad)
    W = estimate_W(eta, p, np.array([0.5]), quad)
    assert V[0, 0] == pytest.approx(2.0 * c ** 2, rel=1e-6)
    assert W[0, 0] == pytest.approx(0.25 * c ** 2, rel=1e-9)
    rep = sandwich(V, W, n=100)
    assert rep.se[0] == pytest.approx(1.0 / (2.0 * c * 10.0), rel=1e-6)
    assert rep.mode == "plugin"
    assert rep.cond_V == pytest.approx(1.0)


def test_two_parameter_closed_form():
    # gap = c1 (t1 - .5) + c2 (t2 - .5) x depends on x, so V is full rank
    # and W works out to exactly V / 8 on the same nodes
    c1, c2 = 0.7, 1.3
    quad = _nodes(M=600, seed=3)
    m1 = float(np.mean(quad[:, 0]))
    m2 = float(np.mean(quad[:, 0] ** 2))

    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return (0.5 + c1 * (theta[0] - 0.5)
                + c2 * (theta[1] - 0.5) * x[:, 0])

    th = np.array([0.5, 0.5])
    V = estimate_V(eta, p, th, quad, unit_domain(2))
    W = estimate_W(eta, p, th, quad, unit_domain(2))
    V_exact = 2.0 * np.array([[c1 ** 2, c1 * c2 * m1],
                              [c1 * c2 * m1, c2 ** 2 * m2]])
    assert np.allclose(V, V_exact, rtol=1e-5, atol=1e-8)
    assert np.allclose(W, V_exact / 8.0, rtol=1e-7, atol=1e-12)
    n = 50
    rep = sandwich(V, W, n=n)
    cov_exact = np.linalg.inv(V_exact) / (2.0 * n)
    assert np.allclose(rep.cov, cov_exact, rtol=1e-4)


def test_W_is_positive_semidefinite():
    rng = np.random.default_rng(11)
    quad = rng.uniform(size=(300, 2))

    def eta(x):
        return 0.3 + 0.4 * x[:, 0]

    def p(x, theta):
        return np.clip(0.2 + 0.3 * np.sin(3 * theta[0] * x[:, 0])
                       + 0.2 * theta[1] * x[:, 1] + 0.1 * theta[2], 0, 1)

    W = estimate_W(eta, p, np.array([0.4, 0.6, 0.5]), quad, unit_domain(3))
    assert np.array_equal(W, W.T)
    assert np.linalg.eigvalsh(W).min() >= -1e-12


def test_singular_hessian_raises_with_advice():
    # a gap that depends on theta only through t1 + t2 gives a rank-1 V
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5 + 0.4 * (theta[0] + theta[1] - 1.0))

    quad = _nodes()
    th = np.array([0.5, 0.5])
    V = estimate_V(eta, p, th, quad, unit_domain(2))
    W = estimate_W(eta, p, th, quad, unit_domain(2))
    with pytest.raises(NumericalError, match="oracle"):
        sandwich(V, W, n=50)


def test_boundary_estimate_warns():
    eta, p = _linear_gap(0.5)
    quad = _nodes()
    V = estimate_V(eta, p, np.array([0.5]), quad)
    W = estimate_W(eta, p, np.array([0.5]), quad)
    with pytest.warns(BoundaryWarning):
        rep = sandwich(V, W, n=50, boundary=True)
    assert isinstance(rep, AsymptoticReport)


def test_raw_units_invariant_to_box_width():
    # the same physical problem posed on [0, 2] must give the same raw-unit
    # standard error once the jacobian maps scaled coordinates back
    c, n = 0.8, 100
    eta, p_unit = _linear_gap(c)
    quad = _nodes()

    V1 = estimate_V(eta, p_unit, np.array([0.5]), quad)
    W1 = estimate_W(eta, p_unit, np.array([0.5]), quad)
    se_unit = sandwich(V1, W1, n=n).se[0]

    wide = Domain(np.array([[0.0, 2.0]]))

    def p_wide(x, theta):
        return np.full(x.shape[0], 0.5 + c * (float(theta[0]) - 1.0))

    V2 = estimate_V(eta, p_wide, np.array([1.0]), quad, wide)
    W2 = estimate_W(eta, p_wide, np.array([1.0]), quad, wide)
    J = wide.jacobian_from_unit(np.array([[1.0]]))
    se_wide = sandwich(V2, W2, n=n, jacobian=J).se[0]
    assert se_wide == pytest.approx(se_unit, rel=1e-9)
    # without the jacobian the scaled-coordinate error is half as large
    se_scaled = sandwich(V2, W2, n=n).se[0]
    assert se_scaled == pytest.approx(se_unit / 2.0, rel=1e-9)


def test_eta_accepts_values_or_callable():
    eta, p = _linear_gap(0.6)
    quad = _nodes()
    th = np.array([0.5])
    V_fn = estimate_V(eta, p, th, quad)
    V_arr = estimate_V(eta(quad), p, th, quad)
    assert np.array_equal(V_fn, V_arr)


def test_assembly_validation():
    I1 = np.eye(1)
    with pytest.raises(InputError):
        sandwich(I1, np.eye(2), n=10)
    with pytest.raises(InputError):
        sandwich(I1, I1, n=0)
    with pytest.raises(InputError):
        sandwich(I1, I1, n=10, mode="bootstrap")
    with pytest.raises(InputError):
        sandwich(I1, I1, n=10, jacobian=np.ones(3))
    with pytest.raises(NumericalError):
        sandwich(I1, -I1, n=10)


def test_non_finite_surfaces_rejected():
    quad = _nodes(M=50)

    def eta_bad(x):
        out = np.full(x.shape[0], 0.5)
        out[0] = np.nan
        return out

    def p(x, theta):
        return np.full(x.shape[0], 0.5)

    with pytest.raises(NumericalError):
        estimate_V(eta_bad, p, np.array([0.5]), quad)

    def p_bad(x, theta):
        return np.full(x.shape[0], np.inf)

    with pytest.raises(NumericalError):
        estimate_V(lambda x: np.full(x.shape[0], 0.5), p_bad,
                   np.array([0.5]), quad)


def test_estimates_are_deterministic():
    eta, p = _linear_gap(0.9)
    quad = _nodes(M=200, seed=21)
    th = np.array([0.5])
    assert np.array_equal(estimate_V(eta, p, th, quad),
                          estimate_V(eta, p, th, quad))
    assert np.array_equal(estimate_W(eta, p, th, quad),
                          estimate_W(eta, p, th, quad))
