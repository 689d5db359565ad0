"""Input validation helpers shared by the functional API and the estimators."""
from __future__ import annotations

import numpy as np


def check_gray_image(X, name: str = "image") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)) or X.min() < 0 or X.max() > 1:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return X


def check_binary_image(X, name: str = "image") -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.dtype != bool:
        if not np.all((X == 0) | (X == 1)):
            raise ValueError(f"{name} must be binary (values in {{0, 1}})")
        X = X.astype(bool)
    return X


def check_label_image(Y, n_classes: int = 3, name: str = "label image") -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {Y.shape}")
    if not np.issubdtype(Y.dtype, np.integer):
        if not np.all(Y == np.round(Y)):
            raise ValueError(f"{name} must hold integer class ids")
        Y = Y.astype(np.int64)
    if Y.size and (Y.min() < 0 or Y.max() >= n_classes):
        raise ValueError(f"{name} class ids must lie in [0, {n_classes})")
    return Y


def check_probmap(P, atol: float = 1e-5, name: str = "probability map") -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 3:
        raise ValueError(f"{name} must have shape (K, H, W), got {P.shape}")
    if not np.all(np.isfinite(P)) or P.min() < 0:
        raise ValueError(f"{name} must be finite and non-negative")
    if not np.allclose(P.sum(axis=0), 1.0, rtol=0, atol=atol):
        raise ValueError(f"{name} must sum to 1 over classes at every pixel")
    return P


def check_same_shape(a, b, name_a: str, name_b: str) -> None:
    if tuple(a) != tuple(b):
        raise ValueError(f"shape mismatch: {name_a} {tuple(a)} vs {name_b} {tuple(b)}")
