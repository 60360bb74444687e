"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def as_features(X, n_features: int | None = None) -> np.ndarray:
    """Coerce X to a 2-D float64 array of shape (n_samples, n_features)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValidationError(f"expected 2-D feature array, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X


def as_labels(y, n_samples: int, n_classes: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise ValidationError(f"expected {n_samples} labels, got shape {y.shape}")
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValidationError(f"labels must lie in [0, {n_classes})")
    return y


def as_theta(theta, n_params: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (n_params,):
        raise ValidationError(
            f"expected parameter vector of length {n_params}, got shape {theta.shape}"
        )
    return theta


def check_fitted(estimator, attr: str = "theta_"):
    if not hasattr(estimator, attr):
        raise ValidationError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
