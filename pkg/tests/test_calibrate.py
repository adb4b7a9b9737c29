"""L2 calibration: objective construction, solvers, and the naive baseline."""

import warnings

import numpy as np
import pytest

from bincalib import (BenchScenario, ComputerDataset, InputError, KernelSpec,
                      KnnLabelClassifier, L2Objective, PhysicalDataset,
                      SampleSizeWarning, calibrate, calibrate_naive, fit_gpc,
                      fit_klr, grid_minimize, l2_distance, unit_domain)


def _oracle_objective(M=10000, seed=0):
    sc = BenchScenario.study41()
    return L2Objective.from_functions(sc.eta, sc.p, sc.domain_x,
                                      sc.domain_theta, M=M, seed=seed)


def _linear_gap_objective(center, M=4000, seed=0):
    # p - eta = theta - center, so the objective is (theta - center)^2
    center = float(center)

    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5 + (float(theta[0]) - center))

    return L2Objective.from_functions(eta, p, unit_domain(1), unit_domain(1),
                                      M=M, seed=seed)


def test_oracle_grid_recovers_true_parameter():
    obj = _oracle_objective()
    grid = np.arange(0.0, 1.0 + 1e-12, 0.005)
    res = grid_minimize(obj, grid)
    assert abs(res.theta[0] - 0.300) <= 0.005
    assert l2_distance(obj, np.array([0.3])) <= 1e-6


def test_solver_agrees_with_dense_grid():
    obj = _oracle_objective()
    res_grid = grid_minimize(obj, np.arange(0.0, 1.0 + 1e-12, 0.005))
    res_opt = calibrate(obj, n_starts=1, seed=0)
    assert abs(res_opt.theta_hat[0] - res_grid.theta[0]) <= 0.004
    # the grid hits the exact zero at 0.300; the solver gets within noise
    assert res_opt.l2_distance <= res_grid.value + 1e-6


def test_linear_gap_minimum_is_sharp():
    obj = _linear_gap_objective(0.4)
    res = calibrate(obj, n_starts=1, seed=0)
    assert abs(res.theta_hat[0] - 0.4) <= 1e-6
    assert not res.flat_flag
    assert not res.boundary


def test_two_parameter_quadratic_gap():
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return 0.5 + (theta[0] - 0.3) + (theta[1] - 0.6) * x[:, 0]

    obj = L2Objective.from_functions(eta, p, unit_domain(1), unit_domain(2),
                                     M=4000, seed=0)
    res = calibrate(obj, n_starts=1, seed=0)
    assert np.max(np.abs(res.theta_hat - np.array([0.3, 0.6]))) <= 1e-5


def test_quartic_bottom_still_localizes():
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5 + (float(theta[0]) - 0.4) ** 2)

    obj = L2Objective.from_functions(eta, p, unit_domain(1), unit_domain(1),
                                     M=2000, seed=0)
    res = calibrate(obj, n_starts=1, seed=0)
    assert abs(res.theta_hat[0] - 0.4) <= 1e-2


def test_flat_objective_sets_flag():
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5)

    obj = L2Objective.from_functions(eta, p, unit_domain(1), unit_domain(1),
                                     M=500, seed=0)
    res = calibrate(obj, n_starts=5, seed=0)
    assert res.flat_flag


def test_exterior_minimum_lands_on_boundary():
    obj = _linear_gap_objective(2.0)
    res = calibrate(obj, n_starts=1, seed=0)
    assert res.boundary
    assert res.theta_hat[0] == pytest.approx(1.0, abs=1e-9)


def test_grid_ties_break_lexicographically():
    def eta(x):
        return np.full(x.shape[0], 0.5)

    def p(x, theta):
        return np.full(x.shape[0], 0.5)

    obj = L2Objective.from_functions(eta, p, unit_domain(1), unit_domain(2),
                                     M=100, seed=0)
    grid = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.5], [0.25, 0.0]])
    res = grid_minimize(obj, grid)
    assert np.array_equal(res.theta, np.array([0.0, 0.5]))
    assert np.array_equal(res.values, np.zeros(4))


def test_quadrature_nodes_are_seeded():
    a = _oracle_objective(M=256, seed=7)
    b = _oracle_objective(M=256, seed=7)
    c = _oracle_objective(M=256, seed=8)
    assert np.array_equal(a.quad_points, b.quad_points)
    assert not np.array_equal(a.quad_points, c.quad_points)


def test_monte_carlo_rule_available():
    sc = BenchScenario.study41()
    obj = L2Objective.from_functions(sc.eta, sc.p, sc.domain_x,
                                     sc.domain_theta, M=20000, seed=0,
                                     quad_rule="monte-carlo")
    res = grid_minimize(obj, np.arange(0.0, 1.0 + 1e-12, 0.005))
    assert abs(res.theta[0] - 0.300) <= 0.005
    with pytest.raises(InputError):
        L2Objective.from_functions(sc.eta, sc.p, sc.domain_x, sc.domain_theta,
                                   M=16, quad_rule="trapezoid")


def test_surface_and_batch_shapes():
    obj = _linear_gap_objective(0.4, M=300)
    thetas = np.array([[0.2], [0.4], [0.9]])
    assert obj.surface(thetas).shape == (300, 3)
    vals = obj.batch(thetas)
    assert vals.shape == (3,)
    assert vals[1] == pytest.approx(0.0, abs=1e-30)
    assert obj(np.array([0.2])) == pytest.approx(vals[0])


def test_calibrate_rejects_bad_start_count():
    obj = _linear_gap_objective(0.4, M=100)
    with pytest.raises(InputError):
        calibrate(obj, n_starts=0, seed=0)
    with pytest.raises(InputError):
        L2Objective.from_functions(lambda x: x[:, 0], lambda x, t: x[:, 0],
                                   unit_domain(1), unit_domain(1), M=0)


def test_calibrate_is_deterministic():
    obj = _oracle_objective(M=2000)
    r1 = calibrate(obj, n_starts=3, seed=5)
    r2 = calibrate(obj, n_starts=3, seed=5)
    assert np.array_equal(r1.theta_hat, r2.theta_hat)
    assert r1.l2_distance == r2.l2_distance


def _tiny_models(n_phys=25, n_comp=60, seed=0):
    rng = np.random.default_rng(seed)
    xp = np.linspace(0.0, 1.0, n_phys)[:, None]
    yp = (rng.uniform(size=n_phys) < 0.2 + 0.6 * xp[:, 0]).astype(float)
    if yp.min() == yp.max():
        yp[0] = 1.0 - yp[0]
    phys = PhysicalDataset(xp, yp, unit_domain(1))
    xc = rng.uniform(size=(n_comp, 1))
    tc = rng.uniform(size=(n_comp, 1))
    yc = (rng.uniform(size=n_comp) < 0.2 + 0.4 * xc[:, 0] + 0.3 * tc[:, 0])
    comp = ComputerDataset(xc, tc, yc.astype(float), unit_domain(1),
                           unit_domain(1))
    eta_model = fit_klr(phys, KernelSpec.matern(nu=2.5, rho=0.5), lam=1e-2)
    p_model = fit_gpc(comp, KernelSpec.rbf(9.0))
    return eta_model, p_model


def test_from_models_runs_end_to_end():
    eta_model, p_model = _tiny_models()
    obj = L2Objective.from_models(eta_model, p_model, M=500, seed=0)
    res = calibrate(obj, n_starts=1, seed=0)
    assert 0.0 <= res.theta_hat[0] <= 1.0
    assert np.isfinite(res.l2_distance)


def test_from_models_warns_when_simulator_sample_is_small():
    eta_model, p_model = _tiny_models(n_phys=30, n_comp=20)
    with pytest.warns(SampleSizeWarning):
        L2Objective.from_models(eta_model, p_model, M=200, seed=0)


def test_from_models_rejects_mismatched_control_domains():
    from bincalib.domains import Domain

    eta_model, _ = _tiny_models()
    wide = Domain(bounds=np.array([[0.0, 2.0]]), names=("x1",))
    rng = np.random.default_rng(1)
    xc = rng.uniform(0.0, 2.0, size=(40, 1))
    tc = rng.uniform(size=(40, 1))
    yc = (rng.uniform(size=40) < 0.5).astype(float)
    if yc.min() == yc.max():
        yc[0] = 1.0 - yc[0]
    comp = ComputerDataset(xc, tc, yc, wide, unit_domain(1))
    p_wide = fit_gpc(comp, KernelSpec.rbf(9.0))
    with pytest.raises(InputError):
        L2Objective.from_models(eta_model, p_wide, M=100, seed=0)


def test_knn_classifier_votes_locally():
    sc = BenchScenario.study41()
    rng = np.random.default_rng(9)
    N = 2000
    xc = rng.uniform(size=(N, 1))
    tc = rng.uniform(size=(N, 1))
    pc = sc.p(xc, tc)
    yc = (rng.uniform(size=N) < pc).astype(float)
    comp = ComputerDataset(xc, tc, yc, sc.domain_x, sc.domain_theta)
    clf = KnnLabelClassifier(comp, k=15)
    assert clf.k == 15

    n = 200
    xp = np.linspace(0.0, 1.0, n)[:, None]
    yp = (rng.uniform(size=n) < sc.eta(xp)).astype(float)
    phys = PhysicalDataset(xp, yp, sc.domain_x)
    res = calibrate_naive(phys, clf, sc.domain_theta)
    assert abs(res.theta_hat[0] - 0.3) <= 0.1
    assert np.isnan(res.l2_distance)


def test_knn_validates_and_caps_k():
    rng = np.random.default_rng(3)
    xc = rng.uniform(size=(8, 1))
    tc = rng.uniform(size=(8, 1))
    yc = np.array([0, 1, 0, 1, 0, 1, 0, 1], dtype=float)
    comp = ComputerDataset(xc, tc, yc, unit_domain(1), unit_domain(1))
    with pytest.raises(InputError):
        KnnLabelClassifier(comp, k=0)
    assert KnnLabelClassifier(comp, k=99).k == 8


def test_naive_flat_classifier_flags_and_breaks_ties_low():
    rng = np.random.default_rng(13)
    xp = rng.uniform(size=(30, 1))
    yp = (rng.uniform(size=30) < 0.5).astype(float)
    if yp.min() == yp.max():
        yp[0] = 1.0 - yp[0]
    phys = PhysicalDataset(xp, yp, unit_domain(1))

    def constant_classifier(x_raw, theta_raw):
        return np.zeros(np.atleast_2d(x_raw).shape[0])

    res = calibrate_naive(phys, constant_classifier, unit_domain(2))
    assert res.flat_flag
    assert np.array_equal(res.theta_hat, np.zeros(2))
    assert res.boundary


def test_naive_accepts_explicit_grid():
    rng = np.random.default_rng(17)
    xp = rng.uniform(size=(20, 1))
    yp = (rng.uniform(size=20) < 0.5).astype(float)
    if yp.min() == yp.max():
        yp[0] = 1.0 - yp[0]
    phys = PhysicalDataset(xp, yp, unit_domain(1))

    def classifier(x_raw, theta_raw):
        # correct exactly when theta is near 0.7; the window is narrower
        # than the grid spacing so only one grid point qualifies
        t = float(np.atleast_1d(theta_raw)[0])
        if abs(t - 0.7) < 0.03:
            return yp
        return 1.0 - yp

    grid = np.linspace(0.0, 1.0, 21)
    res = calibrate_naive(phys, classifier, unit_domain(1), grid=grid)
    assert res.theta_hat[0] == pytest.approx(0.7)
    assert res.starts[0].value == 0.0
