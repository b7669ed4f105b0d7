"""Benchmark problems, synthetic generators and libsvm-format I/O.

All random data comes from ``numpy.random.default_rng(seed)`` (PCG64), so a
seed reproduces the same instance within one numpy version.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from .errors import (
    BadLabel,
    DimensionMismatch,
    EmptyDataset,
    InconsistentDimension,
    ParamOutOfRange,
    ParseError,
)
from .linalg import as_matrix, as_vector
from .residuals import ResidualSystem


class AffineSystem(ResidualSystem):
    """f(x) = A x - b. The linearization is exact, so Gauss-Newton solves it in one step."""

    name = "affine"

    def __init__(self, a, b):
        self.a = as_matrix(a, name="A")
        self.n, self.d = self.a.shape
        self.b = as_vector(b, self.n, name="b")
        if self.n < self.d:
            raise DimensionMismatch(f"affine system needs n >= d, got {self.n}x{self.d}")

    def residual_rows(self, idx, x):
        return self.a[idx] @ x - self.b[idx]

    def jacobian_rows(self, idx, x):
        return self.a[idx].copy()

    def known_solution(self):
        return np.linalg.lstsq(self.a, self.b, rcond=None)[0]


def random_affine(n, d, seed=0, consistent=True):
    """Gaussian A (n x d) with b = A x_true, x_true ~ N(0, I), when ``consistent``."""
    if n < d or d < 1:
        raise ParamOutOfRange("need n >= d >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, d))
    x_true = rng.standard_normal(d)
    b = a @ x_true
    if not consistent:
        b = b + rng.standard_normal(n)
    return AffineSystem(a, b)


class ChandrasekharH(ResidualSystem):
    """Discretized Chandrasekhar H-equation.

    f_i(x) = x_i - 1 / T_i(x),  T_i(x) = 1 - (c / 2n) sum_j mu_i x_j / (mu_i + mu_j),
    with nodes mu_i = (i - 1/2) / n. The Jacobian is I - diag(T^-2) W where
    W_ij = (c / 2n) mu_i / (mu_i + mu_j).
    """

    name = "chandrasekhar"

    def __init__(self, n, c):
        if n < 1:
            raise ParamOutOfRange("n must be >= 1")
        if not 0.0 < c <= 1.0:
            raise ParamOutOfRange(f"c must lie in (0, 1], got {c}")
        self.n = self.d = int(n)
        self.c = float(c)
        mu = (np.arange(1, n + 1) - 0.5) / n
        self.mu = mu
        self.w = (c / (2.0 * n)) * mu[:, None] / (mu[:, None] + mu[None, :])

    def _t(self, idx, x):
        return 1.0 - self.w[idx] @ x

    def residual_rows(self, idx, x):
        return x[idx] - 1.0 / self._t(idx, x)

    def jacobian_rows(self, idx, x):
        t = self._t(idx, x)
        rows = -self.w[idx] / (t * t)[:, None]
        rows[np.arange(len(idx)), idx] += 1.0
        return rows


def chandrasekhar(n, c):
    return ChandrasekharH(n, c)


class RegLogistic(ResidualSystem):
    """Gradient of the nonconvex regularized logistic loss.

    l(x) = (1/N) sum_j log(1 + exp(-b_j a_j^T x)) + theta sum_k nu_reg x_k^2 / (1 + nu_reg x_k^2)

    The residual is f = grad l (so n = d) and component gradients are the
    rows of the Hessian of l.
    """

    name = "logistic"

    def __init__(self, a, b, theta=1e-2, nu_reg=1.0):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] == 0:
            raise EmptyDataset("logistic regression needs at least one sample")
        self.a = as_matrix(a, name="A")
        self.n_samples, self.d = self.a.shape
        self.n = self.d
        b = as_vector(b, self.n_samples, name="labels")
        if not np.all(np.isin(b, (-1.0, 1.0))):
            raise BadLabel("labels must be -1 or +1")
        if theta < 0 or nu_reg <= 0:
            raise ParamOutOfRange("need theta >= 0 and nu_reg > 0")
        self.b = b
        self.theta = float(theta)
        self.nu_reg = float(nu_reg)

    def _margins(self, x):
        return self.b * (self.a @ x)

    def residual_rows(self, idx, x):
        s = expit(-self._margins(x))
        loss_grad = -(self.a[:, idx].T @ (self.b * s)) / self.n_samples
        xi = x[idx]
        q = 1.0 + self.nu_reg * xi * xi
        return loss_grad + self.theta * 2.0 * self.nu_reg * xi / (q * q)

    def jacobian_rows(self, idx, x):
        z = self._margins(x)
        w = expit(z) * expit(-z)
        rows = (self.a[:, idx].T @ (w[:, None] * self.a)) / self.n_samples
        xi = x[idx]
        v = self.nu_reg * xi * xi
        rows[np.arange(len(idx)), idx] += self.theta * 2.0 * self.nu_reg * (1.0 - 3.0 * v) / (1.0 + v) ** 3
        return rows


def reg_logistic(data, theta=1e-2, nu_reg=1.0):
    """Build a :class:`RegLogistic` from a ``(features, labels)`` pair."""
    a, b = data
    return RegLogistic(a, b, theta=theta, nu_reg=nu_reg)


def synthetic_logistic(n_samples=100, d=50, noise=0.05, seed=0):
    """Gaussian features, labels from a planted Gaussian separator, ``noise`` fraction flipped."""
    if n_samples < 1 or d < 1:
        raise ParamOutOfRange("n_samples and d must be positive")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_samples, d))
    w = rng.standard_normal(d)
    b = np.where(a @ w >= 0.0, 1.0, -1.0)
    flip = rng.random(n_samples) < noise
    b[flip] = -b[flip]
    return a, b


class SoftMaxMin(ResidualSystem):
    """Gradient of the smoothed maximum h(x) = mu log sum exp((a_i^T x - b_i)/mu) + lam/2 ||x||^2.

    f(x) = A^T w + lam x with w = softmax((A x - b) / mu). The Hessian is
    (A^T diag(w) A - p p^T) / mu + lam I where p = A^T w.
    """

    name = "softmax"

    def __init__(self, a, b, mu=5.0, lam=2.0):
        self.a = as_matrix(a, name="A")
        n_terms, self.d = self.a.shape
        self.n = self.d
        self.b = as_vector(b, n_terms, name="b")
        if mu <= 0 or lam <= 0:
            raise ParamOutOfRange("mu and lam must be positive")
        self.mu = float(mu)
        self.lam = float(lam)

    def _weights(self, x):
        return softmax((self.a @ x - self.b) / self.mu)

    def residual_rows(self, idx, x):
        w = self._weights(x)
        return self.a[:, idx].T @ w + self.lam * x[idx]

    def jacobian_rows(self, idx, x):
        w = self._weights(x)
        p = self.a.T @ w
        rows = (self.a[:, idx].T @ (w[:, None] * self.a) - np.outer(p[idx], p)) / self.mu
        rows[np.arange(len(idx)), idx] += self.lam
        return rows


def soft_max_min(n_terms, d, mu=5.0, lam=2.0, seed=0):
    """Soft-max minimization with A and b drawn uniformly from [-1, 1]."""
    if n_terms < 1 or d < 1:
        raise ParamOutOfRange("n_terms and d must be positive")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(n_terms, d))
    b = rng.uniform(-1.0, 1.0, size=n_terms)
    return SoftMaxMin(a, b, mu=mu, lam=lam)


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __iter__(self):
        return iter((self.features, self.labels))


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError as err:
        raise ParseError(f"bad label {token!r}", lineno) from err
    if value == 1.0:
        return 1.0
    if value in (0.0, -1.0):
        return -1.0
    raise BadLabel(f"line {lineno}: label {token!r} is not one of -1, 0, +1")


def load_libsvm(path, n_features=None):
    """Read a ``label idx:val ...`` file (1-based indices) into dense arrays.

    Labels 0/1 and -1/+1 are mapped to -1/+1. The feature dimension is the
    largest index seen unless ``n_features`` is given.

    Raises:
      ParseError: malformed line (message carries the line number).
      InconsistentDimension: an index exceeds ``n_features``.
      EmptyDataset: no samples in the file.
    """
    labels = []
    rows = []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_label(tokens[0], lineno))
            entries = {}
            for tok in tokens[1:]:
                key, sep, val = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    j = int(key)
                    value = float(val)
                except ValueError as err:
                    raise ParseError(f"bad entry {tok!r}", lineno) from err
                if j < 1:
                    raise ParseError(f"index {j} is not 1-based", lineno)
                if n_features is not None and j > n_features:
                    raise InconsistentDimension(
                        f"line {lineno}: index {j} exceeds n_features={n_features}"
                    )
                entries[j] = value
                max_index = max(max_index, j)
            rows.append(entries)
    if not rows:
        raise EmptyDataset(f"no samples in {path}")
    d = n_features if n_features is not None else max_index
    if d < 1:
        raise InconsistentDimension("could not infer a positive feature dimension")
    features = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for j, value in entries.items():
            features[r, j - 1] = value
    return LabeledDataset(features, np.array(labels))


def dump_libsvm(path, features, labels):
    """Write dense features and +/-1 labels in libsvm format, zeros omitted.

    Values are written with ``repr`` so a load after dump is bit-exact.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    with open(path, "w") as fh:
        for row, label in zip(features, labels):
            parts = ["+1" if label > 0 else "-1"]
            parts += [f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(parts) + "\n")
