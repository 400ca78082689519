"""Preference weights on the unit simplex and linear scalarisation."""

from __future__ import annotations

import numpy as np

SIMPLEX_ATOL = 1e-12


def validate_weight(w: np.ndarray) -> np.ndarray:
    """Check simplex membership: non-negative entries summing to 1 (atol 1e-12)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise ValueError(f"preference weight must be a vector of dimension >= 2, got {w!r}")
    if np.any(w < 0.0):
        raise ValueError(f"preference weight has negative components: {w}")
    if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"preference weight does not sum to 1: {w} (sum {w.sum()!r})")
    return w


def sample_simplex(rng: np.random.Generator, d: int) -> np.ndarray:
    """Draw one weight uniformly from the unit simplex.

    For d=2 this is w0 ~ uniform(0, 1), w1 = 1 - w0. For d > 2 the
    sorted-uniform-gaps construction is used (gaps between order statistics
    of d-1 uniforms are uniform on the simplex).
    """
    if d < 2:
        raise ValueError(f"need at least two objectives, got d={d}")
    if d == 2:
        u = rng.uniform(0.0, 1.0)
        return np.array([u, 1.0 - u])
    cuts = np.sort(rng.uniform(0.0, 1.0, size=d - 1))
    return np.diff(np.concatenate(([0.0], cuts, [1.0])))


def linear_utility(w: np.ndarray, v: np.ndarray) -> float:
    """Scalarise a value vector with a preference weight: w . v."""
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if w.shape != v.shape:
        raise ValueError(f"dimension mismatch: weight {w.shape} vs value {v.shape}")
    return float(w @ v)


def equally_spaced_weights(k: int, d: int = 2) -> np.ndarray:
    """Grid of k weights with w0 = i/(k-1): first (0, 1), last (1, 0).

    Only d=2 is supported; every experiment in scope is two-objective.
    """
    if k < 2:
        raise ValueError(f"need at least two grid weights, got k={k}")
    if d != 2:
        raise ValueError("equally spaced grids are only defined for d=2 here")
    w0 = np.linspace(0.0, 1.0, k)
    return np.column_stack([w0, 1.0 - w0])
