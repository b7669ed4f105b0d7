"""Residual systems f: R^d -> R^n with per-component access.

A :class:`ResidualSystem` exposes batched row access through
:meth:`~ResidualSystem.residual_rows` and :meth:`~ResidualSystem.jacobian_rows`;
single-component access and the full residual/Jacobian are built on the
same code path. Rows agree with single-component calls up to BLAS
summation order, which can depend on the batch shape.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ParamOutOfRange
from .linalg import as_vector


class ResidualSystem:
    """Base class for a nonlinear map with n components in d variables.

    Subclasses set ``n`` and ``d`` and implement ``residual_rows`` and
    ``jacobian_rows``. Both receive an integer index array and a point
    ``x`` and must be deterministic.
    """

    n: int
    d: int
    name = "system"

    def residual_rows(self, idx, x):
        raise NotImplementedError

    def jacobian_rows(self, idx, x):
        raise NotImplementedError

    def component_value(self, i, x):
        return float(self.residual_rows(np.array([i]), x)[0])

    def component_gradient(self, i, x):
        return self.jacobian_rows(np.array([i]), x)[0]

    def known_solution(self):
        """A root (or least-squares minimizer) if one is known in closed form."""
        return None

    @property
    def all_indices(self):
        return np.arange(self.n)


@dataclass
class EvalCounters:
    value_evals: int = 0
    gradient_evals: int = 0


class CountingSystem(ResidualSystem):
    """Wraps a system and counts component evaluations.

    Epochs are ``gradient_evals / n``. The wrapper is single-owner: give
    each run its own instance.
    """

    def __init__(self, system):
        self.inner = system
        self.n = system.n
        self.d = system.d
        self.name = system.name
        self.counters = EvalCounters()

    def residual_rows(self, idx, x):
        self.counters.value_evals += len(idx)
        return self.inner.residual_rows(idx, x)

    def jacobian_rows(self, idx, x):
        self.counters.gradient_evals += len(idx)
        return self.inner.jacobian_rows(idx, x)

    def known_solution(self):
        return self.inner.known_solution()

    @property
    def epochs(self):
        return self.counters.gradient_evals / self.n


class CallableSystem(ResidualSystem):
    """A system defined by vectorized callables for the full residual and Jacobian.

    Row access slices the full evaluation, so this is meant for small test
    systems, e.g. ``CallableSystem(1, 1, lambda x: x**2 - 4, lambda x: 2 * x[None, :])``.
    """

    def __init__(self, n, d, value, jacobian, solution=None, name="callable"):
        if n < 1 or d < 1:
            raise ParamOutOfRange("n and d must be positive")
        self.n, self.d = n, d
        self._value = value
        self._jacobian = jacobian
        self._solution = None if solution is None else as_vector(solution, d)
        self.name = name

    def residual_rows(self, idx, x):
        return np.asarray(self._value(x), dtype=np.float64).reshape(self.n)[idx]

    def jacobian_rows(self, idx, x):
        return np.asarray(self._jacobian(x), dtype=np.float64).reshape(self.n, self.d)[idx]

    def known_solution(self):
        return self._solution


def _check_point(sys, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != sys.d:
        raise DimensionMismatch(f"x has shape {x.shape}, system expects ({sys.d},)")
    return as_vector(x, sys.d, name="x")


def full_residual(sys, x):
    """f(x) as a length-n vector."""
    x = _check_point(sys, x)
    return sys.residual_rows(np.arange(sys.n), x)


def full_jacobian(sys, x):
    """J(x) as an n x d matrix whose rows are the component gradients."""
    x = _check_point(sys, x)
    return sys.jacobian_rows(np.arange(sys.n), x)


def merit(sys, x):
    """phi(x) = 0.5 * ||f(x)||^2."""
    f = full_residual(sys, x)
    return 0.5 * float(f @ f)


def finite_diff_gradient(sys, i, x, h=None):
    """Central-difference approximation of the gradient of component ``i``."""
    x = _check_point(sys, x)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    if h <= 0:
        raise ParamOutOfRange("finite-difference step must be positive")
    out = np.empty(sys.d)
    xp = x.copy()
    for k in range(sys.d):
        xp[k] = x[k] + h
        fp = sys.component_value(i, xp)
        xp[k] = x[k] - h
        fm = sys.component_value(i, xp)
        xp[k] = x[k]
        out[k] = (fp - fm) / (2.0 * h)
    return out


@dataclass
class GradientMismatch:
    system: str
    component: int
    point: int
    error: float
    bound: float

    def __str__(self):
        return (
            f"{self.system}: component {self.component} at point {self.point}: "
            f"||g - g_fd|| = {self.error:.3e} > {self.bound:.3e}"
        )


def check_gradients(sys, points, rtol=1e-5, components=None):
    """Compare analytic component gradients with central differences.

    Returns a list of :class:`GradientMismatch`, empty when every component
    satisfies ||g_i - g_fd|| <= rtol * (1 + ||g_i||) at every point.
    """
    comps = range(sys.n) if components is None else components
    failures = []
    for p, x in enumerate(points):
        x = _check_point(sys, x)
        jac = full_jacobian(sys, x)
        for i in comps:
            g = jac[i]
            err = float(np.linalg.norm(g - finite_diff_gradient(sys, i, x)))
            bound = rtol * (1.0 + float(np.linalg.norm(g)))
            if not err <= bound:
                failures.append(GradientMismatch(sys.name, int(i), p, err, bound))
    return failures
