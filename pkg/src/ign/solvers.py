"""Incremental Gauss-Newton solvers and baselines.

Every method is a step function over an explicit state. ``mbign_step``
implements the mini-batch incremental Gauss-Newton iteration; plain IGN is
the ``k = 1`` case. ``gn_step`` is vanilla Gauss-Newton and ``ekfs_step``
the extended-Kalman-filter baseline with a stepsize. :func:`run` drives any
of them with epoch accounting, periodic refresh and trace collection.

Index convention: the batch visited at step t is ``t % m`` (0-based), which
is the 1-based ``t % m + 1`` shifted by one.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .errors import (
    Diverged,
    IgnError,
    InnerMatrixSingular,
    NotSPD,
    ParamOutOfRange,
    RunAborted,
    SingularGram,
)
from .linalg import as_vector
from .residuals import CountingSystem, full_jacobian, full_residual

log = logging.getLogger(__name__)

METHODS = ("ign", "mb-ign", "gn", "ekf", "ekf-s")


def make_partition(n, k):
    """Split ``range(n)`` into ceil(n/k) contiguous blocks; all but the last have size k."""
    if not 1 <= k <= n:
        raise ParamOutOfRange(f"batch size k={k} must satisfy 1 <= k <= n={n}")
    return [np.arange(s, min(s + k, n)) for s in range(0, n, k)]


@dataclass
class IgnState:
    """Iterate bundle for (MB-)IGN.

    ``anchors[i]`` is z_i, the point where block i was last linearized.
    ``anchor_grads[j]`` and ``anchor_coef[j]`` cache g_j(z_i) and
    g_j(z_i)^T z_i - f_j(z_i) for each component j of block i, so the
    aggregates can be rebuilt without re-evaluating the system.
    """

    t: int
    x: np.ndarray
    u: np.ndarray
    H: np.ndarray
    G: np.ndarray
    anchors: np.ndarray
    anchor_grads: np.ndarray
    anchor_coef: np.ndarray
    partition: list
    k: int

    @property
    def m(self):
        return len(self.partition)

    def copy(self):
        return replace(
            self,
            x=self.x.copy(),
            u=self.u.copy(),
            H=self.H.copy(),
            G=self.G.copy(),
            anchors=self.anchors.copy(),
            anchor_grads=self.anchor_grads.copy(),
            anchor_coef=self.anchor_coef.copy(),
        )


def init_state(sys, x0, k=1):
    """Linearize every component at x0: z_i = x0, H = J^T J, G = H^-1, u = J^T (J x0 - f)."""
    x0 = as_vector(x0, sys.d, name="x0")
    partition = make_partition(sys.n, k)
    jac = full_jacobian(sys, x0)
    f = full_residual(sys, x0)
    h, g = linalg.gram_and_inverse(jac)
    coef = jac @ x0 - f
    return IgnState(
        t=0,
        x=x0.copy(),
        u=jac.T @ coef,
        H=h,
        G=g,
        anchors=np.tile(x0, (len(partition), 1)),
        anchor_grads=jac,
        anchor_coef=coef,
        partition=partition,
        k=k,
    )


def _interleave(a, b):
    """Columns [a_1, b_1, a_2, b_2, ...] from row stacks a and b."""
    out = np.empty((a.shape[1], 2 * a.shape[0]))
    out[:, 0::2] = a.T
    out[:, 1::2] = b.T
    return out


def mbign_step(state, sys, inplace=False, refresh_on_singular=False):
    """One MB-IGN iteration; returns the new state.

    x^{t+1} = G u, then block i_t = t % m is re-linearized at x^{t+1}: its
    contributions are swapped in u and H, G gets the matching rank-2|S|
    Woodbury correction, and z_{i_t} moves to x^{t+1}.

    With ``inplace=True`` the input state is updated and returned, which
    avoids copying the n x d anchor cache on every step. With
    ``refresh_on_singular=True`` a failed capacitance guard is handled by
    completing the step with a refresh, i.e. G^{t+1} is rebuilt from the
    updated anchors instead of by the Woodbury formula.

    Raises:
      InnerMatrixSingular: the Woodbury capacitance matrix failed its guard
        and ``refresh_on_singular`` is off. The input state is unchanged.
      SingularGram: the refresh fallback found H^{t+1} singular.
    """
    s = state if inplace else state.copy()
    x_new = s.G @ s.u
    i = s.t % s.m
    idx = s.partition[i]
    g_old = s.anchor_grads[idx]
    c_old = s.anchor_coef[idx]
    g_new = sys.jacobian_rows(idx, x_new)
    c_new = g_new @ x_new - sys.residual_rows(idx, x_new)

    u_cols = _interleave(-g_old, g_new)
    v_cols = _interleave(g_old, g_new)
    try:
        g_next = linalg.smw_update(s.G, u_cols, v_cols)
    except InnerMatrixSingular:
        if not refresh_on_singular:
            raise
        log.info("capacitance matrix singular at t=%d; rebuilding G from anchors", s.t)
        g_next = None

    s.u = s.u - g_old.T @ c_old + g_new.T @ c_new
    s.H = s.H - g_old.T @ g_old + g_new.T @ g_new
    s.anchors[i] = x_new
    s.anchor_grads[idx] = g_new
    s.anchor_coef[idx] = c_new
    s.x = x_new
    s.t += 1
    if g_next is None:
        refresh(s, inplace=True)
    else:
        s.G = 0.5 * (g_next + g_next.T)
    return s


def ign_step(state, sys, inplace=False):
    """Single-component IGN step: identical to :func:`mbign_step` with k = 1."""
    if state.k != 1:
        raise ParamOutOfRange("ign_step needs a state built with k=1")
    return mbign_step(state, sys, inplace=inplace)


def refresh(state, inplace=False):
    """Rebuild H, u and G from the cached anchor gradients to purge rounding drift."""
    s = state if inplace else state.copy()
    s.H, s.G = linalg.gram_and_inverse(s.anchor_grads)
    s.u = s.anchor_grads.T @ s.anchor_coef
    return s


def drift(state):
    """max |G H - I|, the distance of the maintained inverse from the true one."""
    return linalg.inverse_residual(state.G, state.H)


def recomputed_aggregates(state, sys):
    """(H, u) rebuilt by evaluating every component at its anchor."""
    d = sys.d
    h = np.zeros((d, d))
    u = np.zeros(d)
    for i, idx in enumerate(state.partition):
        z = state.anchors[i]
        jac = sys.jacobian_rows(idx, z)
        coef = jac @ z - sys.residual_rows(idx, z)
        h += jac.T @ jac
        u += jac.T @ coef
    return h, u


def gn_step(x, sys):
    """Vanilla Gauss-Newton: x - (J^T J)^{-1} J^T f at the current point."""
    x = as_vector(x, sys.d, name="x")
    jac = full_jacobian(sys, x)
    f = full_residual(sys, x)
    h = linalg.gram(jac)
    linalg.check_gram(h)
    try:
        return x - linalg.solve_spd(h, jac.T @ f)
    except NotSPD as err:
        raise SingularGram(str(err)) from err


@dataclass
class EkfState:
    """EKF iterate and its recursive Gram estimate."""

    t: int
    x: np.ndarray
    H: np.ndarray

    def copy(self):
        return replace(self, x=self.x.copy(), H=self.H.copy())


def init_ekf_state(sys, x0, h0=None):
    """Start EKF at x0; the Gram estimate defaults to J(x0)^T J(x0)."""
    x0 = as_vector(x0, sys.d, name="x0")
    if h0 is None:
        h0 = linalg.gram(full_jacobian(sys, x0))
    else:
        h0 = linalg.as_matrix(h0, (sys.d, sys.d), name="H0")
    return EkfState(t=0, x=x0.copy(), H=h0)


def ekfs_step(state, sys, alpha, lam=1.0):
    """x <- x - alpha H^{-1} g_i(x) f_i(x), then H <- lam H + g_i(x_new) g_i(x_new)^T.

    The component is i = t % n. The inverse is applied by a Cholesky solve.
    """
    if not 0.0 < lam <= 1.0:
        raise ParamOutOfRange(f"forgetting factor must lie in (0, 1], got {lam}")
    i = np.array([state.t % sys.n])
    g = sys.jacobian_rows(i, state.x)[0]
    f = sys.residual_rows(i, state.x)[0]
    try:
        step = linalg.solve_spd(state.H, g * f)
    except NotSPD as err:
        raise SingularGram(str(err)) from err
    x_new = state.x - alpha * step
    g_new = sys.jacobian_rows(i, x_new)[0]
    return EkfState(t=state.t + 1, x=x_new, H=lam * state.H + np.outer(g_new, g_new))


def ekf_stepsize(t, n, a=1.0):
    """Default EKF-S stepsize a / (ceil(t/n) + 1)."""
    return a / (math.ceil(t / n) + 1)


@dataclass
class SolverConfig:
    """Run parameters.

    ``refresh_period`` counts full passes between forced refreshes;
    ``drift_tol`` triggers an extra refresh at a pass boundary when
    max |G H - I| exceeds it. ``ekf_a`` and ``ekf_lambda`` set the EKF-S
    schedules alpha_t = ekf_a / (ceil(t/n) + 1) and lambda_t = ekf_lambda.
    """

    k: int = 1
    tol: float = 1e-10
    max_epochs: float = 50.0
    refresh_period: int = 5
    drift_tol: float = 1e-6
    seed: int = 0
    ekf_a: float = 1.0
    ekf_lambda: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ParamOutOfRange("tol must be positive")
        if self.refresh_period < 1:
            raise ParamOutOfRange("refresh_period must be >= 1")
        if not 0.0 < self.drift_tol < 1.0:
            raise ParamOutOfRange("drift_tol must lie in (0, 1)")
        if self.max_epochs < 0:
            raise ParamOutOfRange("max_epochs must be >= 0")
        if self.k < 1:
            raise ParamOutOfRange("k must be >= 1")


@dataclass
class TraceRecord:
    t: int
    epoch: float
    elapsed_seconds: float
    residual_norm: float
    error_norm: float | None = None
    gram_min_sv: float | None = field(default=None, compare=False)


class _Tracer:
    def __init__(self, sys, x_star, start):
        self.sys = sys
        self.x_star = x_star
        self.start = start
        self.records = []

    def record(self, t, epoch, x, gram_min_sv=None):
        # trace residuals use the raw system so they are never charged as epochs
        res = float(np.linalg.norm(full_residual(self.sys, x)))
        err = None if self.x_star is None else float(np.linalg.norm(x - self.x_star))
        rec = TraceRecord(t, epoch, time.perf_counter() - self.start, res, err, gram_min_sv)
        self.records.append(rec)
        return rec


def run(method, sys, config=None, x0=None, x_star=None):
    """Run ``method`` on ``sys`` until ||f(x)|| <= tol or the epoch budget runs out.

    Epochs count component-gradient evaluations divided by n. The batch
    evaluated at a new iterate is charged to the iterate that consumes it,
    so MB-IGN with k = n and GN report the same epoch for each iterate.
    A record is written at t = 0, at every full pass and at termination.

    Raises:
      RunAborted: on solver failure; the exception's ``trace`` holds the
        records collected so far.
    """
    method = method.lower()
    if method not in METHODS:
        raise ParamOutOfRange(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    config = config or SolverConfig()
    x0 = np.zeros(sys.d) if x0 is None else as_vector(x0, sys.d, name="x0")
    if x_star is None:
        x_star = sys.known_solution()
    counting = CountingSystem(sys)
    tracer = _Tracer(sys, x_star, time.perf_counter())
    first = tracer.record(0, 0.0, x0)
    if first.residual_norm <= config.tol or config.max_epochs <= 0:
        return tracer.records
    try:
        if method in ("ign", "mb-ign"):
            k = 1 if method == "ign" else min(config.k, sys.n)
            _run_ign(counting, config, x0, k, tracer)
        elif method == "gn":
            _run_gn(counting, config, x0, tracer)
        else:
            a = 1.0 if method == "ekf" else config.ekf_a
            _run_ekf(counting, config, x0, a, method == "ekf", tracer)
    except RunAborted as err:
        err.trace = tracer.records
        raise
    except IgnError as err:
        raise RunAborted(f"{method} failed at t={_last_t(tracer)}: {err}", tracer.records) from err
    return tracer.records


def _last_t(tracer):
    return tracer.records[-1].t if tracer.records else 0


def _check_finite(x, tracer, t, method):
    if not np.all(np.isfinite(x)):
        raise Diverged(f"{method} produced a non-finite iterate at t={t}", tracer.records)


def _done(tracer, config, t, epoch, x, recorded, gram_min_sv=None):
    res = float(np.linalg.norm(full_residual(tracer.sys, x)))
    if res <= config.tol:
        if not recorded:
            tracer.record(t, epoch, x, gram_min_sv)
        return True
    return False


def _run_ign(sys, config, x0, k, tracer):
    state = init_state(sys, x0, k)
    m = state.m
    n = sys.n
    epoch = 0.0
    while epoch < config.max_epochs:
        try:
            state = mbign_step(state, sys, inplace=True, refresh_on_singular=True)
        except SingularGram as err:
            raise RunAborted(f"Gram matrix singular after refresh at t={state.t}: {err}") from err
        t = state.t
        _check_finite(state.x, tracer, t, "mb-ign")
        # the batch just evaluated at x^t is consumed by x^{t+1}, so it is not charged here
        epoch = (sys.counters.gradient_evals - len(state.partition[(t - 1) % m])) / n
        pass_end = t % m == 0
        min_sv = None
        if pass_end:
            passes = t // m
            if passes % config.refresh_period == 0 or drift(state) > config.drift_tol:
                state = refresh(state, inplace=True)
            min_sv = linalg.smallest_singular_value(state.H)
            tracer.record(t, epoch, state.x, min_sv)
        if _done(tracer, config, t, epoch, state.x, pass_end, min_sv):
            return
    if tracer.records[-1].t != state.t:
        tracer.record(state.t, epoch, state.x)


def _run_gn(sys, config, x0, tracer):
    x = x0
    t = 0
    while sys.epochs < config.max_epochs:
        x = gn_step(x, sys)
        t += 1
        _check_finite(x, tracer, t, "gn")
        tracer.record(t, sys.epochs, x)
        if _done(tracer, config, t, sys.epochs, x, True):
            return


def _run_ekf(sys, config, x0, a, fixed_step, tracer):
    state = init_ekf_state(sys, x0)
    n = sys.n
    epoch = 0.0
    while epoch < config.max_epochs:
        alpha = 1.0 if fixed_step else ekf_stepsize(state.t, n, a)
        state = ekfs_step(state, sys, alpha, config.ekf_lambda)
        t = state.t
        _check_finite(state.x, tracer, t, "ekf")
        epoch = (sys.counters.gradient_evals - 1) / n
        pass_end = t % n == 0
        if pass_end:
            tracer.record(t, epoch, state.x)
        if _done(tracer, config, t, epoch, state.x, pass_end):
            return
    if tracer.records[-1].t != state.t:
        tracer.record(state.t, epoch, state.x)


def epochs_to_tol(trace, tol):
    """Epoch of the first record with residual <= tol, or None if never reached."""
    for rec in trace:
        if rec.residual_norm <= tol:
            return rec.epoch
    return None
