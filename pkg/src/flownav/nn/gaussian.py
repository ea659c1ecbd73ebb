"""Diagonal Gaussian policy utilities."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import A_MAX, OMEGA_DOT_MAX

ACTION_LOW = np.array([-A_MAX, -OMEGA_DOT_MAX])
ACTION_HIGH = np.array([A_MAX, OMEGA_DOT_MAX])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def gaussian_logprob(mu, sigma, action):
    """Log density summed over the last axis."""
    z = (np.asarray(action) - mu) / sigma
    return np.sum(-0.5 * z * z - np.log(sigma) - _HALF_LOG_2PI, axis=-1)


def gaussian_entropy(sigma):
    return np.sum(np.log(sigma) + 0.5 + _HALF_LOG_2PI, axis=-1)


def clip_action(a):
    return np.clip(a, ACTION_LOW, ACTION_HIGH)


def sample_action(mu, sigma, rng: np.random.Generator):
    """Draw from ``N(mu, diag sigma^2)``.

    Returns ``(clipped, raw, logprob)``; the log-probability is that of the
    unclipped draw, which is what the ratio in the surrogate needs.
    """
    mu = np.asarray(mu, dtype=np.float64)
    raw = mu + sigma * rng.standard_normal(mu.shape)
    return clip_action(raw), raw, float(gaussian_logprob(mu, sigma, raw))
