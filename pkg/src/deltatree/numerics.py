"""Small numerical kernel for the 4-parameter test statistic.

Everything here is sized for the symmetric 4x4 information matrix and the
chi-square tail probabilities the split test needs.  No general-purpose
linear algebra: a cyclic Jacobi eigensolver, a ridge-regularized inverse
square root, and an upper-tail chi-square via the regularized incomplete
gamma function.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

_JACOBI_SWEEPS = 50
_GAMMA_MAX_ITER = 500
_GAMMA_EPS = 1e-16
_TINY = 1e-300


class SingularInformationError(Exception):
    """Raised when the information matrix carries no usable signal."""


def jacobi_eigh(m):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    sorted by ascending eigenvalue.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    a = (a + a.T) / 2.0
    v = np.eye(n)

    for sweep in range(_JACOBI_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(a[p, q])
        if off == 0.0:
            break
        # loose threshold on the first sweeps, then anything nonzero
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(a[p, p]) + g == abs(a[p, p]) \
                        and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # rotate rows/columns p and q
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def empirical_information(scores):
    """Average outer product of per-observation score vectors.

    scores: (n, 4) array.  Returns the symmetric (4, 4) information estimate.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim == 1:
        s = s[None, :]
    n = s.shape[0]
    if n < 1:
        raise ValueError("need at least one score vector")
    info = s.T @ s / n
    return (info + info.T) / 2.0


def inv_sqrt(m, ridge_rel=1e-10):
    """Symmetric inverse square root with eigenvalue ridge flooring.

    Eigenvalues below ridge_rel * lambda_max are floored at that threshold
    before inversion, so rank-deficient directions are damped instead of
    exploding.  Raises SingularInformationError when every eigenvalue sits
    below the ridge.
    """
    b, _ = inv_sqrt_info(m, ridge_rel)
    return b


def inv_sqrt_info(m, ridge_rel=1e-10):
    """Like inv_sqrt but also reports how many eigenvalues were floored."""
    w, v = jacobi_eigh(m)
    lam_max = float(w.max(initial=0.0))
    if lam_max <= 0.0:
        raise SingularInformationError("information matrix has no positive eigenvalue")
    thresh = ridge_rel * lam_max
    n_floored = int(np.sum(w < thresh))
    if n_floored == w.shape[0]:
        raise SingularInformationError("all eigenvalues below the ridge threshold")
    w_floored = np.maximum(w, thresh)
    b = (v * (1.0 / np.sqrt(w_floored))) @ v.T
    return (b + b.T) / 2.0, n_floored


def _lower_regularized_series(a, x):
    # series expansion of P(a, x), converges fast for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_regularized_cf(a, x):
    # modified Lentz continued fraction for Q(a, x), x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a, x):
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_regularized_series(a, x)))
    return min(1.0, max(0.0, _upper_regularized_cf(a, x)))


def chisq_sf(t, df):
    """Upper-tail probability of the chi-square distribution with df degrees."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if t < 0.0:
        warnings.warn("negative chi-square statistic clamped to 0", RuntimeWarning)
        return 1.0
    return gamma_q(df / 2.0, t / 2.0)
