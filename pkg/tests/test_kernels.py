"""Kernel evaluation, Gram construction, and backend parity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bincalib import (InputError, KernelSpec, NumericalError, backend, cross,
                      eval_kernel, gram, safe_cholesky)
from bincalib.kernels import _cross_numpy


def _points(rng, m, k):
    return rng.uniform(size=(m, k))


def test_rbf_matches_closed_form():
    spec = KernelSpec.rbf(phi=4.0)
    a = np.array([0.1, 0.2])
    b = np.array([0.5, 0.9])
    d2 = np.sum((a - b) ** 2)
    assert eval_kernel(spec, a, b) == pytest.approx(math.exp(-4.0 * d2),
                                                    rel=1e-14)


def test_matern25_closed_form_value():
    # t = sqrt(10) d / rho, value (1 + t + t^2/3) e^{-t}
    spec = KernelSpec.matern(nu=2.5, rho=0.7)
    d = 0.31
    t = math.sqrt(10.0) * d / 0.7
    expected = (1.0 + t + t * t / 3.0) * math.exp(-t)
    got = eval_kernel(spec, np.array([0.0]), np.array([d]))
    assert got == pytest.approx(expected, rel=1e-13)


def test_matern15_closed_form_value():
    spec = KernelSpec.matern(nu=1.5, rho=1.3)
    d = 0.52
    t = math.sqrt(6.0) * d / 1.3
    expected = (1.0 + t) * math.exp(-t)
    got = eval_kernel(spec, np.array([0.0]), np.array([d]))
    assert got == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("nu", [1.5, 2.5])
def test_closed_forms_match_bessel_branch(nu):
    from bincalib.kernels import _matern_general
    rho = 0.9
    d = np.linspace(1e-6, 2.5, 200)
    spec = KernelSpec.matern(nu=nu, rho=rho)
    closed = cross(spec, np.zeros((1, 1)), d[:, None])[0]
    bessel = _matern_general(d, nu, rho)
    assert np.allclose(closed, bessel, rtol=1e-9, atol=1e-12)


def test_kernel_at_zero_distance_is_one():
    for spec in (KernelSpec.rbf(2.0), KernelSpec.matern(2.5, 0.5),
                 KernelSpec.matern(3.7, 1.1)):
        assert eval_kernel(spec, [0.3, 0.4], [0.3, 0.4]) == pytest.approx(1.0)


def test_kernel_symmetry_and_range():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(size=3), rng.uniform(size=3)
    for spec in (KernelSpec.rbf(9.0), KernelSpec.matern(2.5, 0.25)):
        v1 = eval_kernel(spec, a, b)
        v2 = eval_kernel(spec, b, a)
        assert v1 == pytest.approx(v2, rel=1e-15)
        assert 0.0 < v1 <= 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(1, 4),
       st.sampled_from(["rbf", "m15", "m25"]), st.integers(0, 10 ** 6))
def test_gram_positive_semidefinite(m, k, fam, seed):
    rng = np.random.default_rng(seed)
    pts = _points(rng, m, k)
    spec = {"rbf": KernelSpec.rbf(5.0), "m15": KernelSpec.matern(1.5, 0.5),
            "m25": KernelSpec.matern(2.5, 0.5)}[fam]
    K = gram(spec, pts).entries
    assert np.allclose(K, K.T)
    eig = np.linalg.eigvalsh(K)
    assert eig.min() >= -1e-8


def test_backend_parity_with_numpy():
    if backend() != "compiled":
        pytest.skip("compiled extension not active")
    rng = np.random.default_rng(3)
    a, b = _points(rng, 40, 3), _points(rng, 25, 3)
    for spec in (KernelSpec.rbf(7.0), KernelSpec.matern(1.5, 0.8),
                 KernelSpec.matern(2.5, 0.3)):
        fast = cross(spec, a, b)
        ref = _cross_numpy(spec, a, b)
        assert np.max(np.abs(fast - ref)) < 1e-12


def test_general_nu_uses_bessel_form():
    spec = KernelSpec.matern(nu=3.2, rho=0.6)
    v = eval_kernel(spec, np.array([0.0]), np.array([0.4]))
    assert 0.0 < v < 1.0
    near = eval_kernel(spec, np.array([0.0]), np.array([1e-12]))
    assert near == pytest.approx(1.0, abs=1e-9)


def test_dimension_mismatch_raises():
    with pytest.raises(InputError):
        cross(KernelSpec.rbf(1.0), np.zeros((2, 2)), np.zeros((2, 3)))


def test_spec_validation():
    with pytest.raises(InputError):
        KernelSpec.matern(nu=0.5, rho=1.0)
    with pytest.raises(InputError):
        KernelSpec.matern(nu=2.5, rho=-1.0)
    with pytest.raises(InputError):
        KernelSpec.rbf(phi=0.0)
    with pytest.raises(InputError):
        KernelSpec(family="cubic")


def test_gram_jitter_on_diagonal():
    pts = np.array([[0.1], [0.9]])
    g = gram(KernelSpec.rbf(2.0), pts, jitter=1e-6)
    base = gram(KernelSpec.rbf(2.0), pts).entries
    assert np.allclose(g.entries - base, 1e-6 * np.eye(2))
    assert g.jitter == 1e-6


def test_safe_cholesky_handles_duplicates():
    pts = np.array([[0.5], [0.5], [0.7]])
    K = gram(KernelSpec.rbf(3.0), pts).entries
    L, used = safe_cholesky(K)
    assert used <= 1e-4
    assert np.allclose(L @ L.T, K + used * np.eye(3), atol=1e-9)


def test_safe_cholesky_gives_up_with_jitter_info():
    bad = np.array([[1.0, 0.0], [0.0, -5.0]])
    with pytest.raises(NumericalError) as err:
        safe_cholesky(bad)
    assert err.value.jitter == 1e-4
