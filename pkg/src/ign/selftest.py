"""Desk-scale invariant suite behind ``ign-bench selftest``."""

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg, problems, rate_theory, solvers
from .residuals import check_gradients, full_residual


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def __str__(self):
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}" + (f": {self.detail}" if self.detail else "")


def default_systems(seed=0):
    """Small instances of every shipped problem."""
    return [
        problems.random_affine(12, 8, seed=seed),
        problems.chandrasekhar(12, 0.9),
        problems.reg_logistic(problems.synthetic_logistic(60, 10, seed=seed)),
        problems.soft_max_min(40, 10, seed=seed),
    ]


def _random_point(sys, rng):
    if isinstance(sys, problems.ChandrasekharH):
        # stay where 1 - W x > 0
        return rng.uniform(0.5, 1.5, sys.d)
    return rng.standard_normal(sys.d)


def gradient_checks(systems, seeds=(0,), points=4, rtol=1e-5):
    out = []
    for sys in systems:
        failures = []
        for seed in seeds:
            rng = np.random.default_rng(seed)
            pts = [_random_point(sys, rng) for _ in range(points)]
            failures += check_gradients(sys, pts, rtol=rtol)
        detail = "; ".join(str(f) for f in failures[:3])
        out.append(CheckResult(f"gradient:{sys.name}", not failures, detail))
    return out


def smw_checks(seeds=(0,), trials=40):
    worst = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            d = int(rng.integers(1, 21))
            p = int(rng.integers(1, 7))
            b = rng.standard_normal((d, d))
            h = b @ b.T + d * np.eye(d)
            u = rng.standard_normal((d, p))
            v = rng.standard_normal((d, p))
            h_new = h + u @ v.T
            exact = np.linalg.inv(h_new)
            got = linalg.smw_update(np.linalg.inv(h), u, v)
            bound = 1e-9 * np.linalg.cond(h_new) * max(1.0, np.max(np.abs(exact)))
            worst = max(worst, np.max(np.abs(got - exact)) / bound)
    return [CheckResult("linalg:smw_vs_dense_inverse", worst <= 1.0, f"worst error/bound {worst:.2e}")]


def equivalence_checks():
    out = []
    for sys, x0 in [
        (problems.chandrasekhar(20, 0.9), np.ones(20)),
        (problems.random_affine(15, 10, seed=1), np.zeros(10)),
    ]:
        state = solvers.init_state(sys, x0, k=sys.n)
        x = x0
        gap = 0.0
        for _ in range(6):
            state = solvers.mbign_step(state, sys)
            x = solvers.gn_step(x, sys)
            gap = max(gap, float(np.max(np.abs(state.x - x))))
        out.append(CheckResult(f"identity:mbign(k=n)=gn:{sys.name}", gap <= 1e-9, f"max gap {gap:.2e}"))

    sys = problems.chandrasekhar(10, 0.5)
    x0 = np.ones(10)
    a = solvers.init_state(sys, x0, k=1)
    b = solvers.init_state(sys, x0, k=1)
    same = True
    for _ in range(25):
        a = solvers.ign_step(a, sys)
        b = solvers.mbign_step(b, sys)
        same &= bool(np.array_equal(a.x, b.x))
    out.append(CheckResult("identity:ign=mbign(k=1)", same))

    sys = problems.random_affine(12, 6, seed=2)
    trace = solvers.run("ign", sys, solvers.SolverConfig(tol=1e-10, max_epochs=3))
    ok = trace[-1].residual_norm <= 1e-10 and trace[-1].t == 1
    out.append(CheckResult("exactness:affine_one_step", ok, f"residual {trace[-1].residual_norm:.2e}"))
    return out


def fixed_point_checks():
    sys = problems.chandrasekhar(10, 0.5)
    x = np.ones(10)
    for _ in range(30):
        x = solvers.gn_step(x, sys)
    state = solvers.init_state(sys, x)
    gap = 0.0
    for _ in range(20):
        state = solvers.mbign_step(state, sys)
        gap = max(gap, float(np.linalg.norm(state.x - x)))
    res = float(np.linalg.norm(full_residual(sys, x)))
    return [CheckResult("fixed_point:ign_at_root", gap <= 1e-12 and res <= 1e-12, f"drift {gap:.2e}")]


def sequence_checks():
    bad = []
    for n, nu in itertools.product((1, 2, 5, 10, 25), (0.25, 0.5, 0.75, 1.0)):
        bad += [(n, nu) + v for v in rate_theory.check_lemmas(n, nu, 12 * n)]
    return [CheckResult("rate_theory:lemmas", not bad, str(bad[:3]) if bad else "")]


def run_selftest(seeds=range(5), systems=None):
    """Run every check and return the list of :class:`CheckResult`."""
    seeds = tuple(seeds)
    results = []
    sys_list = systems if systems is not None else default_systems()
    results += gradient_checks(sys_list, seeds=seeds)
    results += smw_checks(seeds=seeds)
    results += equivalence_checks()
    results += fixed_point_checks()
    results += sequence_checks()
    return results
