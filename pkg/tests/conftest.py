"""Shared test oracles and fixtures.

The oracles here are deliberately independent of the library code paths
they check: finite differences for gradients, a direct pairwise dominance
scan for Pareto filtering, and Monte-Carlo area estimation for
hypervolume.
"""

from __future__ import annotations

import numpy as np
import pytest

from momarl import nn
from momarl.agents import AlgoConfig


def fd_scalar_loss(params: nn.MlpParams, x: np.ndarray, gy: np.ndarray) -> float:
    out, _ = nn.forward(params, x)
    return float(np.sum(out * gy))


def finite_difference_param_grads(
    params: nn.MlpParams, x: np.ndarray, gy: np.ndarray, h: float = 1e-5
) -> nn.MlpParams:
    """Central differences of L = forward(params, x) . gy w.r.t. every parameter."""
    grads = nn.zeros_like_params(params)
    for arrays, garrays in ((params.weights, grads.weights), (params.biases, grads.biases)):
        for a, g in zip(arrays, garrays):
            flat = a.reshape(-1)
            gflat = g.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                plus = fd_scalar_loss(params, x, gy)
                flat[k] = orig - h
                minus = fd_scalar_loss(params, x, gy)
                flat[k] = orig
                gflat[k] = (plus - minus) / (2.0 * h)
    return grads


def finite_difference_input_grad(
    params: nn.MlpParams, x: np.ndarray, gy: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        plus = fd_scalar_loss(params, x, gy)
        flat[k] = orig - h
        minus = fd_scalar_loss(params, x, gy)
        flat[k] = orig
        gflat[k] = (plus - minus) / (2.0 * h)
    return grad


def relative_errors(analytic: np.ndarray, fd: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    """|a - f| / max(|a|, |f|, floor), the usual gradcheck normalization."""
    a = np.asarray(analytic, dtype=np.float64)
    f = np.asarray(fd, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
    return np.abs(a - f) / denom


def min_pre_activation_margin(params: nn.MlpParams, x: np.ndarray) -> float:
    """Smallest |pre-activation| of any relu layer; finite differences are
    invalid within h of the kink."""
    if params.spec.hidden_activation != "relu" and params.spec.output_activation != "relu":
        return np.inf
    _, cache = nn.forward(params, x)
    margins = [np.min(np.abs(z)) for z in cache.pre[:-1]]
    return float(min(margins)) if margins else np.inf


def random_mlp_instance(rng: np.random.Generator, kink_margin: float = 1e-3):
    """A random (params, input, output_grad) triple safely away from relu kinks."""
    while True:
        depth = int(rng.integers(1, 4))
        widths = tuple(int(rng.integers(1, 7)) for _ in range(depth + 1))
        spec = nn.MlpSpec(
            widths,
            hidden_activation=("relu", "tanh")[int(rng.integers(2))],
            output_activation=("identity", "tanh")[int(rng.integers(2))],
        )
        params = nn.init_params(spec, int(rng.integers(2 ** 31)))
        x = rng.normal(0.0, 1.0, size=spec.input_dim)
        gy = rng.normal(0.0, 1.0, size=spec.output_dim)
        if min_pre_activation_margin(params, x) > kink_margin:
            return params, x, gy


def dominance_brute_force(points: np.ndarray) -> np.ndarray:
    """Direct transcription of weak dominance: drop p when some distinct q >= p."""
    seen = set()
    unique = []
    for row in points:
        key = tuple(float(v) for v in row)
        if key not in seen:
            seen.add(key)
            unique.append(np.asarray(row, dtype=np.float64))
    keep = []
    for p in unique:
        dominated = False
        for q in unique:
            if np.all(q >= p) and np.any(q != p):
                dominated = True
                break
        if not dominated:
            keep.append(p)
    if not keep:
        return np.empty((0, points.shape[1]))
    return np.array(sorted(keep, key=lambda r: tuple(r)))


def monte_carlo_hypervolume(
    front: np.ndarray, ref, n_samples: int, rng: np.random.Generator
) -> float:
    """Fraction of a bounding box weakly dominated by the front, times its area."""
    front = np.atleast_2d(np.asarray(front, dtype=np.float64))
    ref = np.asarray(ref, dtype=np.float64)
    hi = front.max(axis=0)
    box = float(np.prod(hi - ref))
    if box <= 0:
        return 0.0
    xs = rng.uniform(ref[0], hi[0], size=n_samples)
    ys = rng.uniform(ref[1], hi[1], size=n_samples)
    dominated = np.zeros(n_samples, dtype=bool)
    for px, py in front:
        dominated |= (xs <= px) & (ys <= py)
    return box * float(dominated.mean())


@pytest.fixture
def tiny_cfg():
    """A fast configuration for structural training tests."""
    return AlgoConfig(
        trunk_widths=(16, 16),
        head_widths=(8,),
        critic_widths=(16, 16),
        batch_size=16,
        warmup_steps=24,
        buffer_capacity=2000,
    )
