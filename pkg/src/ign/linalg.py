"""Dense linear algebra kernel for the Gram-matrix machinery.

Vectors and matrices are plain float64 numpy arrays. The helpers below
validate shape and finiteness at the boundary; everything else is a thin,
deterministic layer over LAPACK.
"""

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    InnerMatrixSingular,
    NonFiniteValue,
    NotSPD,
    SingularGram,
)

#: Relative threshold on sigma_min(H) / ||H|| below which a Gram matrix is singular.
GRAM_RCOND = 1e-12
#: Relative threshold on sigma_min(M) / max(1, ||M||) for the capacitance matrix.
INNER_RCOND = 1e-10
#: Relative asymmetry tolerated by :func:`solve_spd`.
SYMMETRY_RTOL = 1e-10


def as_vector(x, d=None, name="vector"):
    """Return ``x`` as a finite 1-D float64 array, optionally of length ``d``."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {d}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return v


def as_matrix(a, shape=None, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array, optionally with a fixed shape."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise DimensionMismatch(f"{name} has shape {m.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return m


def singular_values(m):
    return scipy.linalg.svdvals(as_matrix(m))


def smallest_singular_value(m):
    """Smallest singular value of an n x d matrix (zero is a valid answer)."""
    m = as_matrix(m)
    if m.shape[0] < m.shape[1]:
        # wide matrices have a nontrivial null space
        return 0.0
    return float(scipy.linalg.svdvals(m)[-1])


def gram(j):
    """J^T J, symmetrized so the result is exactly symmetric."""
    j = as_matrix(j, name="J")
    h = j.T @ j
    return 0.5 * (h + h.T)


def _inverse_spd(h):
    try:
        c = scipy.linalg.cho_factor(h, lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise NotSPD(str(err)) from err
    g = scipy.linalg.cho_solve(c, np.eye(h.shape[0]), check_finite=False)
    return 0.5 * (g + g.T)


def check_gram(h, rcond=GRAM_RCOND):
    """Raise :class:`SingularGram` unless sigma_min(H) > rcond * ||H||."""
    s = scipy.linalg.svdvals(h)
    if s[0] == 0.0 or s[-1] <= rcond * s[0]:
        raise SingularGram(
            f"Gram matrix is numerically singular: sigma_min={s[-1]:.3e}, ||H||={s[0]:.3e}"
        )
    return float(s[-1])


def gram_and_inverse(j, rcond=GRAM_RCOND):
    """Build H = J^T J and its inverse G for an n x d Jacobian with n >= d.

    Raises:
      SingularGram: if J does not have numerically full column rank.
    """
    j = as_matrix(j, name="J")
    n, d = j.shape
    if n < d:
        raise SingularGram(f"J is {n}x{d}; need n >= d for a nonsingular Gram matrix")
    h = gram(j)
    check_gram(h, rcond)
    try:
        g = _inverse_spd(h)
    except NotSPD as err:
        raise SingularGram(str(err)) from err
    return h, g


def inverse_spd(h, rcond=GRAM_RCOND):
    """Inverse of a symmetric positive-definite matrix, with the Gram singularity test."""
    h = as_matrix(h, name="H")
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"H must be square, got {h.shape}")
    h = 0.5 * (h + h.T)
    check_gram(h, rcond)
    try:
        return _inverse_spd(h)
    except NotSPD as err:
        raise SingularGram(str(err)) from err


def solve_spd(h, b):
    """Solve H x = b for symmetric positive-definite H via Cholesky.

    Raises:
      NotSPD: if H is asymmetric beyond tolerance or the factorization fails.
    """
    h = as_matrix(h, name="H")
    d = h.shape[0]
    if h.shape[1] != d:
        raise DimensionMismatch(f"H must be square, got {h.shape}")
    b = as_vector(b, d, name="b")
    scale = np.max(np.abs(h))
    if np.max(np.abs(h - h.T)) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise NotSPD("matrix is not symmetric")
    try:
        c = scipy.linalg.cho_factor(h, lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise NotSPD(str(err)) from err
    return scipy.linalg.cho_solve(c, b, check_finite=False)


def smw_update(g, u, v, rcond=INNER_RCOND):
    """Sherman-Morrison-Woodbury update of an inverse.

    Given G = A^{-1}, return (A + U V^T)^{-1} = G - G U M^{-1} V^T G with the
    capacitance matrix M = I + V^T G U. M is inverted through its SVD, which
    also provides the singularity guard.

    Raises:
      InnerMatrixSingular: if sigma_min(M) < rcond * max(1, ||M||).
    """
    g = as_matrix(g, name="G")
    d = g.shape[0]
    u = as_matrix(u, name="U")
    v = as_matrix(v, name="V")
    if g.shape != (d, d) or u.shape[0] != d or v.shape != u.shape:
        raise DimensionMismatch(f"incompatible shapes G{g.shape} U{u.shape} V{v.shape}")
    gu = g @ u
    vtg = v.T @ g
    m = np.eye(u.shape[1]) + v.T @ gu
    w, s, zt = scipy.linalg.svd(m, check_finite=False)
    if s[-1] < rcond * max(1.0, s[0]):
        raise InnerMatrixSingular(
            f"capacitance matrix singular: sigma_min={s[-1]:.3e}, ||M||={s[0]:.3e}"
        )
    # M^{-1} = Z diag(1/s) W^T
    m_inv_vtg = zt.T @ ((w.T @ vtg) / s[:, None])
    return g - gu @ m_inv_vtg


def inverse_residual(g, h):
    """max-norm of G H - I, the drift measure for a maintained inverse."""
    return float(np.max(np.abs(g @ h - np.eye(h.shape[0]))))
