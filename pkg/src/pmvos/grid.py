"""Dense grid primitives shared by every other module.

Feature grids are (C, H, W) float64 arrays; probability fields are
(K, H, W) arrays whose K values sum to one at every pixel.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError

PROB_SUM_TOL = 1e-5
_ZERO_NORM = 1e-12


def _as_finite_3d(data, what):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or 0 in arr.shape:
        raise InvalidInputError(f"{what} must be a non-empty 3-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    """Per-pixel feature vectors in (channel, row, column) order."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = _as_finite_3d(self.data, "feature grid")
        if self.normalized:
            norms = np.sqrt(np.einsum("chw,chw->hw", arr, arr))
            if np.any((norms > 0) & (np.abs(norms - 1.0) > 1e-5)):
                raise InvalidInputError("grid flagged normalized has non-unit pixel vectors")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def pixels(self):
        """(H*W, C) view, one row per pixel."""
        return self.data.reshape(self.channels, -1).T


@dataclass(frozen=True, eq=False)
class ProbabilityField:
    """Per-pixel class probabilities; class 0 is background."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_finite_3d(self.data, "probability field")
        if arr.shape[0] < 2:
            raise InvalidInputError("a probability field needs at least two classes")
        if arr.min() < -PROB_SUM_TOL or arr.max() > 1 + PROB_SUM_TOL:
            raise InvalidInputError("probabilities must lie in [0, 1]")
        if np.abs(arr.sum(axis=0) - 1.0).max() > PROB_SUM_TOL:
            raise InvalidInputError("class probabilities must sum to 1 at every pixel")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_mask(cls, mask):
        """Two-class field from a binary (or soft) foreground mask."""
        fg = np.asarray(mask, dtype=np.float64)
        if fg.ndim != 2:
            raise InvalidInputError("mask must be 2-d")
        return cls(np.stack([1.0 - fg, fg]))

    @property
    def classes(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    @property
    def foreground(self):
        return self.data[1]


def l2_normalize_pixels(grid):
    """Scale every pixel vector to unit length; near-zero vectors become zero."""
    data = grid.data if isinstance(grid, FeatureGrid) else _as_finite_3d(grid, "feature grid")
    norms = np.sqrt(np.einsum("chw,chw->hw", data, data))
    safe = np.where(norms < _ZERO_NORM, 1.0, norms)
    out = np.where(norms < _ZERO_NORM, 0.0, data / safe)
    return FeatureGrid(out, normalized=True)


def _area_weights(n_in, n_out):
    """(n_out, n_in) matrix of fractional overlaps; every row sums to 1."""
    scale = n_in / n_out
    weights = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            weights[i, j] = min(hi, j + 1) - max(lo, j)
    return weights / weights.sum(axis=1, keepdims=True)


def resize_probability(field, out_h, out_w):
    """Area-average resampling of every class plane to ``out_h`` x ``out_w``."""
    if int(out_h) < 1 or int(out_w) < 1:
        raise InvalidArgumentError(f"target size must be positive, got {out_h}x{out_w}")
    data = field.data if isinstance(field, ProbabilityField) else ProbabilityField(field).data
    if data.shape[1:] == (out_h, out_w):
        return field if isinstance(field, ProbabilityField) else ProbabilityField(data)
    rows = _area_weights(data.shape[1], int(out_h))
    cols = _area_weights(data.shape[2], int(out_w))
    out = np.einsum("ih,khw,jw->kij", rows, data, cols)
    # renormalise away the last-ulp drift so downstream sum checks stay tight
    out /= out.sum(axis=0, keepdims=True)
    return ProbabilityField(out)


def softmax_channels(grid):
    """Numerically stable per-pixel softmax over channels."""
    data = grid.data if isinstance(grid, FeatureGrid) else _as_finite_3d(grid, "logits")
    if data.shape[0] < 2:
        raise InvalidArgumentError("softmax needs at least two channels")
    shifted = data - data.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return ProbabilityField(e / e.sum(axis=0, keepdims=True))
