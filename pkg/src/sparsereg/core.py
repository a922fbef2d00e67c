"""Vector and matrix primitives shared by the solver, diagnostics, and bounds.

Conventions used throughout the package:
  * designs are dense (n, d) float arrays, one sample per row;
  * indices are 0-based in the Python API (the CLI reports 1-based);
  * norm index ``p`` is a float in [1, inf], with ``math.inf`` for the max norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

_SYMMETRY_TOL = 1e-12
_PSD_TOL = 1e-10


def as_design(X) -> np.ndarray:
    """Validate and return a design matrix as a float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"design matrix must be 2-D, got shape {arr.shape}")
    n, d = arr.shape
    if n < 1 or d < 1:
        raise DimensionMismatch("design matrix needs at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError("design matrix has non-finite entries")
    return arr


def as_vector(v, length=None, name="vector") -> np.ndarray:
    """Validate and return a 1-D float array, optionally of a fixed length."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Sample second-moment matrix (1/n) X^T X with its column-scale metadata.

    ``column_scale`` is the square root of the largest diagonal entry; it is
    the scale constant the estimation bounds depend on.
    """

    values: np.ndarray
    column_scale: float

    def __post_init__(self):
        A = np.asarray(self.values, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"gram matrix must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("gram matrix has non-finite entries")
        scale = max(1.0, float(np.abs(A).max()))
        if np.abs(A - A.T).max() > _SYMMETRY_TOL * scale:
            raise ValueError("gram matrix is not symmetric")
        if np.linalg.eigvalsh(A).min() < -_PSD_TOL * scale:
            raise ValueError("gram matrix is not positive semi-definite")
        expected = math.sqrt(max(0.0, float(np.diag(A).max())))
        if abs(self.column_scale - expected) > 1e-10 * max(1.0, expected):
            raise ValueError("column_scale does not match the diagonal maximum")
        object.__setattr__(self, "values", A)

    @property
    def d(self) -> int:
        return self.values.shape[0]


def gram(X) -> GramMatrix:
    """Compute (1/n) X^T X with exact symmetrization."""
    X = as_design(X)
    n = X.shape[0]
    A = X.T @ X / n
    A = (A + A.T) / 2.0
    return GramMatrix(values=A, column_scale=math.sqrt(float(np.diag(A).max())))


def residual_correlation(X, y, beta) -> np.ndarray:
    """Per-feature correlation of the prediction residual, (1/n) X^T (X beta - y)."""
    X = as_design(X)
    n, d = X.shape
    y = as_vector(y, n, "response")
    beta = as_vector(beta, d, "coefficients")
    return X.T @ (X @ beta - y) / n


def p_norm(v, p) -> float:
    """Vector p-norm for any real p >= 1, including the max norm at p = inf."""
    if p < 1:
        raise ValueError(f"norm index must be >= 1, got {p}")
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(np.sqrt((a * a).sum()))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    # factor out the max to avoid overflow at large p
    return m * float(((a / m) ** p).sum()) ** (1.0 / p)


def tail_norm(beta, k, p) -> float:
    """p-norm of the d - k smallest-magnitude coefficients.

    Magnitude ties are broken toward the lower index, so the discarded head
    is deterministic.
    """
    beta = as_vector(beta, name="coefficients")
    d = beta.shape[0]
    if not 0 <= k <= d:
        raise ValueError(f"k must satisfy 0 <= k <= {d}, got {k}")
    if k == d:
        return 0.0
    order = np.argsort(-np.abs(beta), kind="stable")
    return p_norm(beta[order[k:]], p)


def support_threshold(beta, alpha) -> frozenset[int]:
    """Indices with coefficient magnitude strictly above alpha."""
    if alpha < 0:
        raise ValueError(f"threshold must be nonnegative, got {alpha}")
    beta = as_vector(beta, name="coefficients")
    return frozenset(int(j) for j in np.flatnonzero(np.abs(beta) > alpha))
