import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ign import linalg
from ign.errors import InnerMatrixSingular, NonFiniteValue, NotSPD, SingularGram


def test_gram_identity():
    h, g = linalg.gram_and_inverse(np.eye(3))
    np.testing.assert_array_equal(h, np.eye(3))
    np.testing.assert_allclose(g, np.eye(3))


def test_gram_column():
    h, g = linalg.gram_and_inverse(np.array([[2.0], [0.0]]))
    assert h[0, 0] == 4.0
    assert g[0, 0] == pytest.approx(0.25, abs=1e-15)


def test_gram_random_inverse():
    j = np.random.default_rng(7).standard_normal((5, 3))
    h, g = linalg.gram_and_inverse(j)
    np.testing.assert_allclose(h, h.T)
    assert np.max(np.abs(g @ h - np.eye(3))) <= 1e-10
    np.testing.assert_allclose(g, np.linalg.inv(j.T @ j), rtol=1e-10)


def test_gram_rank_deficient():
    j = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(SingularGram):
        linalg.gram_and_inverse(j)
    with pytest.raises(SingularGram):
        linalg.gram_and_inverse(np.ones((1, 2)))


def test_smw_zero_update():
    g = np.linalg.inv(np.array([[2.0, 0.3], [0.3, 1.0]]))
    out = linalg.smw_update(g, np.zeros((2, 2)), np.zeros((2, 2)))
    np.testing.assert_allclose(out, g, atol=1e-15)


def test_smw_scalar():
    out = linalg.smw_update(np.array([[0.5]]), np.array([[-1.0, 2.0]]), np.array([[1.0, 2.0]]))
    assert out[0, 0] == pytest.approx(0.2, rel=1e-14)


def test_smw_rank2_seed11():
    rng = np.random.default_rng(11)
    b = rng.standard_normal((3, 3))
    h = b @ b.T + np.eye(3)
    u = rng.standard_normal((3, 2))
    v = rng.standard_normal((3, 2))
    out = linalg.smw_update(np.linalg.inv(h), u, v)
    assert np.max(np.abs(out - np.linalg.inv(h + u @ v.T))) <= 1e-9


def test_smw_guard():
    # H = 1, update -1: H + U V^T = 0
    with pytest.raises(InnerMatrixSingular):
        linalg.smw_update(np.array([[1.0]]), np.array([[-1.0]]), np.array([[1.0]]))


@settings(max_examples=150, deadline=None)
@given(
    d=st.integers(1, 20),
    p=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
)
def test_smw_matches_dense_inverse(d, p, seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((d, d))
    h = b @ b.T + d * np.eye(d)
    u = rng.standard_normal((d, p))
    v = rng.standard_normal((d, p))
    h_new = h + u @ v.T
    cond = np.linalg.cond(h_new)
    if cond > 1e8:
        return
    try:
        out = linalg.smw_update(np.linalg.inv(h), u, v)
    except InnerMatrixSingular:
        return
    assert np.max(np.abs(out - np.linalg.inv(h_new))) <= 1e-9 * cond


def test_solve_spd_examples():
    np.testing.assert_array_equal(linalg.solve_spd(np.eye(3), np.array([1.0, 0, 0])), [1.0, 0, 0])
    assert linalg.solve_spd(np.array([[4.0]]), np.array([2.0]))[0] == pytest.approx(0.5)
    x = linalg.solve_spd(np.diag([1.0, 2.0, 4.0]), np.ones(3))
    np.testing.assert_allclose(x, [1.0, 0.5, 0.25], rtol=1e-15)


def test_solve_spd_rejects():
    with pytest.raises(NotSPD):
        linalg.solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))
    with pytest.raises(NotSPD):
        linalg.solve_spd(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 15), seed=st.integers(0, 10**6))
def test_solve_agrees_with_inverse(d, seed):
    rng = np.random.default_rng(seed)
    j = rng.standard_normal((2 * d + 3, d))
    b = rng.standard_normal(d)
    h, g = linalg.gram_and_inverse(j)
    x = linalg.solve_spd(h, b)
    assert np.linalg.norm(h @ x - b) <= 1e-10 * (np.linalg.norm(h, 2) * np.linalg.norm(x) + np.linalg.norm(b))
    assert np.linalg.norm(x - g @ b) <= 1e-9 * np.linalg.norm(x)


def test_smallest_singular_value_examples():
    assert linalg.smallest_singular_value(np.eye(3)) == pytest.approx(1.0)
    assert linalg.smallest_singular_value(np.diag([3.0, 0.5])) == pytest.approx(0.5)
    m = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    # M^T M = [[1,1],[1,2]]: eigenvalues (3 +- sqrt 5)/2
    expected = np.sqrt((3.0 - np.sqrt(5.0)) / 2.0)
    assert linalg.smallest_singular_value(m) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 12), d=st.integers(1, 12), seed=st.integers(0, 10**6))
def test_sigma_min_squared_is_min_eigenvalue(n, d, seed):
    if n < d:
        n, d = d, n
    m = np.random.default_rng(seed).standard_normal((n, d))
    s = linalg.smallest_singular_value(m)
    lam = np.linalg.eigvalsh(m.T @ m)[0]
    assert s * s == pytest.approx(lam, rel=1e-6, abs=1e-12)


def test_non_finite_rejected():
    with pytest.raises(NonFiniteValue):
        linalg.as_vector([1.0, np.nan])
    with pytest.raises(NonFiniteValue):
        linalg.as_matrix([[np.inf]])
