"""Spatial and channel self-attention over similarity-map stacks.

No learned projections: queries, keys and values are the maps themselves.
Energies are Gram matrices, normalised by a row softmax, and the attended
result is added back to the input with a scalar residual weight.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError

DEFAULT_GAMMA = 1.0


@dataclass(frozen=True, eq=False)
class AttentionOutput:
    """``data[k]`` is (2n, H, W): spatial branch maps then channel branch maps."""

    data: np.ndarray
    gamma_spatial: float
    gamma_channel: float


def _check_stack(stack):
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim != 3 or 0 in arr.shape:
        raise InvalidInputError(f"stack must be a non-empty (n, H, W) array, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("stack contains non-finite values")
    return arr


def _row_softmax(energy):
    e = np.exp(energy - energy.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def spatial_affinity(stack):
    """The (HW, HW) row-stochastic position affinity."""
    arr = _check_stack(stack)
    f = arr.reshape(arr.shape[0], -1).T
    return _row_softmax(f @ f.T)


def channel_affinity(stack):
    """The (n, n) row-stochastic map-to-map affinity."""
    arr = _check_stack(stack)
    g = arr.reshape(arr.shape[0], -1)
    return _row_softmax(g @ g.T)


def spatial_attention(stack, gamma=DEFAULT_GAMMA):
    arr = _check_stack(stack)
    n, h, w = arr.shape
    f = arr.reshape(n, -1).T
    out = kernels.attend_rows(f).T.reshape(n, h, w)
    return gamma * out + arr


def channel_attention(stack, gamma=DEFAULT_GAMMA):
    arr = _check_stack(stack)
    n, h, w = arr.shape
    g = arr.reshape(n, -1)
    out = (channel_affinity(arr) @ g).reshape(n, h, w)
    return gamma * out + arr


def attend(stack, gamma_spatial=DEFAULT_GAMMA, gamma_channel=DEFAULT_GAMMA):
    """Apply both branches to each class of a :class:`SimilarityStack`."""
    maps = stack.maps if hasattr(stack, "maps") else np.asarray(stack, dtype=np.float64)
    out = np.stack([
        np.concatenate([
            spatial_attention(maps[k], gamma_spatial),
            channel_attention(maps[k], gamma_channel),
        ])
        for k in range(maps.shape[0])
    ])
    return AttentionOutput(out, float(gamma_spatial), float(gamma_channel))
