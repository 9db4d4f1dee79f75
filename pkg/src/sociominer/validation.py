"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.utils import check_array

from .errors import InputError, InvalidK


def check_binary_matrix(X, accept_sparse=True):
    """Return X as a CSR matrix of 0/1 int entries; raise on other values."""
    if hasattr(X, "to_csr"):  # TouchMatrix
        X = X.to_csr()
    X = check_array(X, accept_sparse=["csr", "csc", "coo"] if accept_sparse else False,
                    dtype=None, ensure_2d=True)
    X = sp.csr_matrix(X)
    X.eliminate_zeros()
    if X.nnz and not np.all(X.data == 1):
        raise InputError("touch matrix entries must be 0 or 1")
    return X.astype(np.int64)


def check_affinity(A, tol=1e-12):
    A = check_array(A, dtype=np.float64, ensure_2d=True)
    n, m = A.shape
    if n != m:
        raise InputError(f"affinity matrix must be square, got {A.shape}")
    if not np.allclose(A, A.T, atol=tol, rtol=0):
        raise InputError("affinity matrix must be symmetric")
    if A.size and (A.min() < 0 or A.max() > 1 + tol):
        raise InputError("affinity values must lie in [0, 1]")
    return A


def check_points(X):
    return check_array(X, dtype=np.float64, ensure_2d=True)


def check_k(k, n_distinct=None):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k!r}")
    if n_distinct is not None and k > n_distinct:
        raise InvalidK(f"k={k} exceeds the number of distinct points ({n_distinct})")
    return int(k)


def n_distinct_rows(X) -> int:
    return len(np.unique(np.asarray(X), axis=0)) if len(X) else 0
