"""Input checks shared by the estimator front-ends."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .env import EnvConfig, NavEnv


def check_env_config(env) -> EnvConfig:
    """Accept an :class:`EnvConfig` or a :class:`NavEnv` and return the config."""
    if isinstance(env, NavEnv):
        return env.cfg
    if isinstance(env, EnvConfig):
        return env
    raise TypeError(f"expected EnvConfig or NavEnv, got {type(env).__name__}")


def check_observations(X, n_features: int) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, but the policy expects {n_features}")
    return X


def check_sequence_side(arr, n: int, width: int | None, name: str) -> np.ndarray | None:
    """Validate an optional per-step side input (previous actions or rewards)."""
    if arr is None:
        return None
    arr = np.asarray(arr, dtype=np.float64)
    shape = (n,) if width is None else (n, width)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)
