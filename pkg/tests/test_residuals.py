import numpy as np
import pytest

from ign import problems
from ign.errors import DimensionMismatch
from ign.residuals import (
    CallableSystem,
    CountingSystem,
    check_gradients,
    finite_diff_gradient,
    full_jacobian,
    full_residual,
    merit,
)


def scalar_square():
    return CallableSystem(1, 1, lambda x: np.array([x[0] ** 2 - 4.0]), lambda x: np.array([[2.0 * x[0]]]))


def test_full_residual_examples():
    eye = problems.AffineSystem(np.eye(2), np.zeros(2))
    np.testing.assert_array_equal(full_residual(eye, np.array([1.0, 2.0])), [1.0, 2.0])
    aff = problems.AffineSystem([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [0.0, 0.0, 3.0])
    np.testing.assert_array_equal(full_residual(aff, np.array([1.0, 2.0])), [1.0, 2.0, 0.0])
    np.testing.assert_array_equal(full_residual(scalar_square(), np.array([3.0])), [5.0])


def test_full_jacobian_examples():
    a = np.random.default_rng(0).standard_normal((4, 2))
    aff = problems.AffineSystem(a, np.zeros(4))
    for x in (np.zeros(2), np.array([3.0, -1.0])):
        np.testing.assert_array_equal(full_jacobian(aff, x), a)
    np.testing.assert_array_equal(full_jacobian(scalar_square(), np.array([3.0])), [[6.0]])

    ch = problems.chandrasekhar(3, 0.5)
    x = np.ones(3)
    jac = full_jacobian(ch, x)
    for i in range(3):
        fd = finite_diff_gradient(ch, i, x)
        np.testing.assert_allclose(jac[i], fd, rtol=1e-6, atol=1e-9)


def test_dimension_mismatch():
    aff = problems.random_affine(5, 3)
    with pytest.raises(DimensionMismatch):
        full_residual(aff, np.zeros(4))
    with pytest.raises(DimensionMismatch):
        full_jacobian(aff, np.zeros(2))


def test_merit_examples():
    aff = problems.AffineSystem(np.eye(2), np.array([1.0, 1.0]))
    assert merit(aff, np.array([1.0, 1.0])) == 0.0
    assert merit(aff, np.array([4.0, 5.0])) == 12.5
    assert merit(scalar_square(), np.array([3.0])) == 12.5


def test_finite_difference_examples():
    aff = problems.random_affine(4, 3, seed=2)
    x = np.array([0.3, -1.2, 2.0])
    for i in range(4):
        np.testing.assert_allclose(finite_diff_gradient(aff, i, x), aff.a[i], atol=1e-9)
    assert finite_diff_gradient(scalar_square(), 0, np.array([3.0]))[0] == pytest.approx(6.0, abs=1e-6)

    sm = problems.soft_max_min(15, 6, seed=3)
    x = np.random.default_rng(3).standard_normal(6)
    for i in range(6):
        g = sm.component_gradient(i, x)
        fd = finite_diff_gradient(sm, i, x)
        assert np.linalg.norm(g - fd) <= 1e-5 * (1 + np.linalg.norm(g))


def test_jacobian_rows_match_component_gradients():
    for sys in (problems.chandrasekhar(6, 0.9), problems.soft_max_min(10, 6, seed=1)):
        x = np.linspace(0.5, 1.5, sys.d)
        jac = full_jacobian(sys, x)
        f = full_residual(sys, x)
        for i in range(sys.n):
            np.testing.assert_allclose(jac[i], sys.component_gradient(i, x), rtol=1e-14, atol=1e-15)
            assert f[i] == pytest.approx(sys.component_value(i, x), rel=1e-14, abs=1e-15)


def test_counting_system():
    sys = CountingSystem(problems.chandrasekhar(4, 0.5))
    x = np.ones(4)
    full_residual(sys, x)
    assert sys.counters.value_evals == 4
    sys.jacobian_rows(np.array([0, 1]), x)
    assert sys.counters.gradient_evals == 2
    assert sys.epochs == 0.5


def test_check_gradients_reports_sign_flip():
    class Flipped(problems.ChandrasekharH):
        name = "flipped"

        def jacobian_rows(self, idx, x):
            rows = super().jacobian_rows(idx, x)
            rows[idx == 2] *= -1.0
            return rows

    bad = check_gradients(Flipped(5, 0.5), [np.ones(5)])
    assert [m.component for m in bad] == [2]
    assert "flipped" in str(bad[0]) and "2" in str(bad[0])
