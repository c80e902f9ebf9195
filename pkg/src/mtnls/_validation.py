"""Array validation shared by the estimator facade."""

from __future__ import annotations

import numpy as np

from .exceptions import UsageError


def check_coeff_array(X, basis) -> np.ndarray:
    """2-D complex ``(n_samples, n_modes)`` array with finite entries."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != basis.n_modes:
        raise UsageError(f"expected shape (n_samples, {basis.n_modes}), got {X.shape}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise UsageError("coefficient array contains non-finite values")
    return X


def check_grid_array(X, basis) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != basis.grid_shape:
        raise UsageError(f"expected shape (n_samples, {basis.grid_shape[0]}, {basis.grid_shape[1]}), got {X.shape}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise UsageError("grid array contains non-finite values")
    return X
