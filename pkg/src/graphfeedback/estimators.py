"""Observation probabilities, exposure, and importance-weighted estimates."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter
from .graphs import FeedbackGraph

SIMPLEX_TOL = 1e-9


def check_distribution(p, k: int | None = None) -> np.ndarray:
    """Return ``p`` as a float array after checking it lies on the simplex."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidParameter(f"distribution must be a non-empty vector, got shape {arr.shape}")
    if k is not None and arr.size != k:
        raise InvalidParameter(f"distribution has {arr.size} entries, graph has {k} actions")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidParameter("distribution entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidParameter(f"distribution sums to {arr.sum()!r}, not 1")
    return arr


def check_losses(losses, k: int | None = None) -> np.ndarray:
    arr = np.asarray(losses, dtype=np.float64)
    if arr.ndim != 1 or (k is not None and arr.size != k):
        raise InvalidParameter(f"loss vector must have {k} entries, got shape {arr.shape}")
    if np.any(~(arr >= 0.0)) or np.any(~(arr <= 1.0)):
        raise InvalidParameter("losses must lie in [0, 1]")
    return arr


def observation_probs(p, g: FeedbackGraph) -> np.ndarray:
    """``q_i``: total probability of the actions whose play reveals ``i``."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (g.k,):
        raise InvalidParameter(f"distribution of length {arr.size} does not match k = {g.k}")
    return arr @ g.observation_matrix


def exposure(p, g: FeedbackGraph) -> float:
    """``Q = sum_i p_i / q_i``; lies in ``[1, k]`` for a strictly positive ``p``.

    Terms with ``p_i = 0`` contribute nothing.
    """
    arr = np.asarray(p, dtype=np.float64)
    q = observation_probs(arr, g)
    mask = arr > 0
    return float(np.sum(arr[mask] / q[mask]))


def iw_estimate(value: float, observed: bool, q: float, bias: float = 0.0) -> float:
    """Importance-weighted estimate ``(value * 1{observed} + bias) / q``."""
    if not q > 0:
        raise InvalidParameter(f"observation probability must be positive, got {q!r}")
    if bias < 0:
        raise InvalidParameter(f"bias must be nonnegative, got {bias!r}")
    return ((value if observed else 0.0) + bias) / q


def iw_estimates(values, observed_mask, q, bias: float = 0.0) -> np.ndarray:
    """Vectorised :func:`iw_estimate` over all actions."""
    q = np.asarray(q, dtype=np.float64)
    if np.any(~(q > 0)):
        raise InvalidParameter("observation probabilities must be positive")
    return (np.where(observed_mask, values, 0.0) + bias) / q
