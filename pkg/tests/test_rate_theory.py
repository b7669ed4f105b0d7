import itertools
import math

import mpmath
import numpy as np
import pytest

from ign import rate_theory as rt
from ign.errors import ParamOutOfRange

GRID = list(itertools.product((1, 2, 5, 10, 25), (0.25, 0.5, 0.75, 1.0)))


def reference_sequence(n, nu, T):
    """High-precision oracle for the recurrence."""
    with mpmath.workdps(60):
        p = 1 + mpmath.mpf(nu)
        a = [mpmath.mpf(1)]
        for t in range(1, T + 1):
            if t <= n:
                s = mpmath.fsum(x**p for x in a[:t]) + (n - t)
            else:
                s = mpmath.fsum(x**p for x in a[t - n : t])
            a.append(s / (2 * p * n))
        return [float(x) for x in a]


def test_first_terms():
    for n, nu in GRID:
        a = rt.aux_sequence(n, nu, 3)
        assert a[0] == 1.0
        assert a[1] == pytest.approx(1.0 / (2.0 * (1.0 + nu)), rel=1e-15)
    assert rt.aux_sequence(2, 1.0, 2)[2] == 17 / 128


@pytest.mark.parametrize("n,nu", [(1, 1.0), (2, 1.0), (3, 0.5), (7, 0.25), (10, 0.75)])
def test_matches_high_precision_oracle(n, nu):
    T = 6 * n
    exact = reference_sequence(n, nu, T)
    got = rt.aux_sequence(n, nu, T).values
    for t in range(T + 1):
        assert got[t] == pytest.approx(exact[t], rel=1e-12, abs=1e-300)


def test_n1_closed_form():
    a = rt.aux_sequence(1, 1.0, 6).values
    for t in range(7):
        assert a[t] == pytest.approx(0.25 ** (2**t - 1), rel=1e-14)


def test_contraction_factor_examples():
    assert rt.contraction_factor(1, 1.0) == pytest.approx(1 / 16, rel=1e-15)
    assert rt.contraction_factor(4, 1.0) == pytest.approx(1 - 15 / 64, rel=1e-15)
    for n, nu in GRID:
        assert 0 < rt.contraction_factor(n, nu) < 1


@pytest.mark.parametrize("n,nu", GRID)
def test_bracket(n, nu):
    c = rt.contraction_factor(n, nu)
    assert c >= 1 - 15 / (16 * n) - 1e-15
    assert c < 1 - 1 / (2 * n)
    if nu < 1:
        assert c > 1 - 15 / (16 * n)


@pytest.mark.parametrize("n,nu", GRID)
def test_lemmas_hold(n, nu):
    assert rt.check_lemmas(n, nu, 12 * n) == []
    margins = rt.lemma_margins(n, nu, 12 * n)
    for col in margins.values():
        vals = col[~np.isnan(col)]
        assert np.all(vals >= -1e-12)
    a = rt.aux_sequence(n, nu, 12 * n).values
    # terms decay doubly exponentially and eventually underflow to 0.0
    assert np.all(a >= 0) and np.all(a <= 1)
    assert np.all(a[a > 0] == a[: np.count_nonzero(a)])


def test_radius_examples():
    p = rt.TheoryParams(mu=2.0, lipschitz=1.0, holder=1.0, nu=1.0, n=1)
    assert rt.convergence_radius(p) == 1.0
    for nu in (0.25, 0.5, 1.0):
        p = rt.TheoryParams(mu=2.0, lipschitz=1.0, holder=1.0, nu=nu, n=1)
        assert rt.convergence_radius(p) == pytest.approx(1.0)
    full = rt.TheoryParams(mu=3.0, lipschitz=2.0, holder=0.5, nu=1.0, n=6, k=6)
    assert rt.convergence_radius(full) == pytest.approx(9.0 / (4 * 6 * 2.0 * 0.5))
    mini = rt.TheoryParams(mu=3.0, lipschitz=2.0, holder=0.5, nu=0.5, n=7, k=3)
    assert rt.convergence_radius(mini) == pytest.approx((9.0 / (4 * 3 * 2.0 * 0.5 * 3)) ** 2)


def test_params_validation():
    with pytest.raises(ParamOutOfRange):
        rt.TheoryParams(mu=0.0, lipschitz=1.0, holder=1.0, nu=1.0, n=1)
    with pytest.raises(ParamOutOfRange):
        rt.TheoryParams(mu=1.0, lipschitz=1.0, holder=1.0, nu=1.5, n=1)
    with pytest.raises(ParamOutOfRange):
        rt.TheoryParams(mu=1.0, lipschitz=1.0, holder=1.0, nu=1.0, n=3, k=4)
    with pytest.raises(ParamOutOfRange):
        rt.aux_sequence(0, 1.0, 3)
    with pytest.raises(ParamOutOfRange):
        rt.aux_sequence(2, 0.0, 3)
    with pytest.raises(ParamOutOfRange):
        rt.aux_sequence(2, 1.0, -1)


def test_envelope():
    a = rt.aux_sequence(3, 0.5, 10).values
    np.testing.assert_array_equal(rt.rate_envelope(3, 0.5, 0.3, 10), a)
    np.testing.assert_allclose(rt.rate_envelope(3, 0.5, 4.0, 10), 4.0 * a)
    assert rt.rate_envelope(2, 1.0, 1.0, 2)[2] == 17 / 128
    n = 4
    r = rt.rate_envelope(n, 1.0, 0.8, 8 * n)
    for t in range(n, 8 * n + 1):
        assert r[t] <= 0.25 * r[t - n] ** 2 + 1e-15
    with pytest.raises(ParamOutOfRange):
        rt.rate_envelope(2, 1.0, -1.0, 3)


def test_superlinear_factor_decreases():
    f = [rt.superlinear_factor(3, 0.5, t) for t in range(3, 30)]
    assert all(b <= a for a, b in zip(f, f[1:]))
    assert f[0] == pytest.approx(rt.contraction_factor(3, 0.5))
    assert math.isfinite(f[-1])
