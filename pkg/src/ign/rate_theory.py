"""Auxiliary rate sequence and convergence constants for (MB-)IGN.

The sequence a_t(n, nu) bounds ||x^t - x*|| / ||x^0 - x*|| for IGN with
period n (use m = ceil(n/k) for mini-batches)::

    a_0 = 1
    a_t = (sum_{j<t} a_j^(1+nu) + n - t) / (2 (1+nu) n)      for 1 <= t <= n
    a_t = sum_{j=t-n}^{t-1} a_j^(1+nu) / (2 (1+nu) n)         for t > n

:func:`lemma_margins` evaluates the sequence's structural inequalities
as rhs - lhs columns, nonnegative whenever the inequality holds.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamOutOfRange


def _check(n, nu):
    if int(n) != n or n < 1:
        raise ParamOutOfRange(f"n must be a positive integer, got {n}")
    if not 0.0 < nu <= 1.0:
        raise ParamOutOfRange(f"Hölder exponent must lie in (0, 1], got {nu}")


@dataclass(frozen=True)
class AuxSequence:
    n: int
    nu: float
    values: np.ndarray

    def __getitem__(self, t):
        return self.values[t]

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TheoryParams:
    """Constants of the local analysis: sigma_min(J(x*)), Lipschitz and Hölder constants."""

    mu: float
    lipschitz: float
    holder: float
    nu: float
    n: int
    k: int = 1

    def __post_init__(self):
        _check(self.n, self.nu)
        if min(self.mu, self.lipschitz, self.holder) <= 0:
            raise ParamOutOfRange("mu, lipschitz and holder constants must be positive")
        if not 1 <= self.k <= self.n:
            raise ParamOutOfRange("need 1 <= k <= n")


def aux_sequence(n, nu, T):
    """a_0 .. a_T by direct recurrence in double precision."""
    _check(n, nu)
    if T < 0:
        raise ParamOutOfRange("T must be >= 0")
    p = 1.0 + nu
    scale = 1.0 / (2.0 * p * n)
    a = np.empty(T + 1)
    powers = np.empty(T + 1)
    a[0] = powers[0] = 1.0
    for t in range(1, T + 1):
        if t <= n:
            a[t] = scale * (math.fsum(powers[:t]) + n - t)
        else:
            a[t] = scale * math.fsum(powers[t - n : t])
        powers[t] = a[t] ** p
    return AuxSequence(int(n), float(nu), a)


def contraction_factor(n, nu):
    """c = 1 - (1 - (1 / (2 (1+nu)))^(1+nu)) / n."""
    _check(n, nu)
    return 1.0 - (1.0 - (1.0 / (2.0 * (1.0 + nu))) ** (1.0 + nu)) / n


def convergence_radius(params):
    """Radius of the ball around x* from which (MB-)IGN provably converges.

    (mu^2 / (4 k L_f H_nu ceil(n/k)))^(1/nu); k = 1 gives the single-component radius.
    """
    m = math.ceil(params.n / params.k)
    denom = 4.0 * params.k * params.lipschitz * params.holder * m
    return (params.mu**2 / denom) ** (1.0 / params.nu)


def rate_envelope(n, nu, r0, T):
    """r_t = a_t(n, nu) * max(r0, 1) for t = 0..T (r_0 itself is max(r0, 1))."""
    if r0 < 0:
        raise ParamOutOfRange("r0 must be nonnegative")
    return aux_sequence(n, nu, T).values * max(float(r0), 1.0)


def superlinear_factor(n, nu, t):
    """c^((1+nu)^(floor(t/n) - 1)), the per-step factor bounding a_{t+1}/a_t for t >= n."""
    c = contraction_factor(n, nu)
    return c ** ((1.0 + nu) ** (t // n - 1))


def lemma_margins(n, nu, T):
    """Per-t slack of each property of the sequence; NaN where a property does not apply.

    Keys: ``bounded`` (a_t <= 1), ``monotone`` (a_{t+1} <= a_t),
    ``n_step`` (a_t <= a_{t-n}^(1+nu) / (2(1+nu)), t >= n),
    ``linear`` (a_{t+1} <= c a_t, t >= n) and
    ``superlinear`` (a_{t+1} <= c^((1+nu)^(floor(t/n)-1)) a_t, t >= n).
    The last two are indexed by t and are NaN at t = T.
    """
    a = aux_sequence(n, nu, T).values
    c = contraction_factor(n, nu)
    p = 1.0 + nu
    nan = np.full(T + 1, np.nan)
    out = {
        "bounded": 1.0 - a,
        "monotone": nan.copy(),
        "n_step": nan.copy(),
        "linear": nan.copy(),
        "superlinear": nan.copy(),
    }
    for t in range(T + 1):
        if t < T:
            out["monotone"][t] = a[t] - a[t + 1]
        if t >= n:
            out["n_step"][t] = a[t - n] ** p / (2.0 * p) - a[t]
            if t < T:
                out["linear"][t] = c * a[t] - a[t + 1]
                out["superlinear"][t] = superlinear_factor(n, nu, t) * a[t] - a[t + 1]
    return out


def corollary_bracket_margins(n, nu):
    """(c - (1 - 15/(16n)), (1 - 1/(2n)) - c); both must be >= 0 and the second > 0."""
    c = contraction_factor(n, nu)
    return c - (1.0 - 15.0 / (16.0 * n)), (1.0 - 1.0 / (2.0 * n)) - c


def check_lemmas(n, nu, T, slack=1e-12):
    """List of ``(property, t, margin)`` for every violated inequality."""
    bad = []
    for name, col in lemma_margins(n, nu, T).items():
        for t, v in enumerate(col):
            if not np.isnan(v) and v < -slack:
                bad.append((name, t, float(v)))
    lo, hi = corollary_bracket_margins(n, nu)
    if lo < -slack:
        bad.append(("bracket_lower", -1, lo))
    if not hi > 0:
        bad.append(("bracket_upper", -1, hi))
    return bad
