"""Per-class template features: weighted grids, medial summary and its EMA.

A weighted template holds, for background and foreground, the normalized
features scaled pixel-wise by that class's probability. The medial template
compresses each frame's weighted features into one vector per class and
blends those vectors over time with an exponential moving average.
"""
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .grid import FeatureGrid, ProbabilityField, l2_normalize_pixels

DEFAULT_ALPHA = 0.1
_EMPTY_CLASS = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedTemplate:
    """``data[k]`` is the (C, H', W') probability-weighted grid for class k."""

    data: np.ndarray
    source_frame: int = 0

    @property
    def channels(self):
        return self.data.shape[1]

    def pixels(self, k):
        """(H'*W', C) rows of class ``k``."""
        return self.data[k].reshape(self.channels, -1).T


@dataclass(frozen=True, eq=False)
class MedialTemplate:
    vectors: np.ndarray
    alpha: float = DEFAULT_ALPHA
    initialized: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must be in (0, 1], got {self.alpha}")

    @classmethod
    def empty(cls, channels, alpha=DEFAULT_ALPHA):
        return cls(np.zeros((2, channels)), alpha=alpha, initialized=False)


@dataclass(frozen=True, eq=False)
class TemplateBank:
    global_: WeightedTemplate
    local: WeightedTemplate
    medial: MedialTemplate


def _check_pair(features, probs):
    if not isinstance(features, FeatureGrid):
        features = FeatureGrid(features)
    if not features.normalized:
        features = l2_normalize_pixels(features)
    if not isinstance(probs, ProbabilityField):
        probs = ProbabilityField(probs)
    if probs.classes != 2:
        raise InvalidArgumentError(f"expected 2 classes, got {probs.classes}")
    if probs.shape[1:] != features.shape[1:]:
        raise InvalidArgumentError(
            f"probability field {probs.shape[1:]} does not match features {features.shape[1:]}"
        )
    return features, probs


def weighted_template(features, probs, source_frame=0):
    """Scale normalized features by each class's per-pixel probability."""
    features, probs = _check_pair(features, probs)
    data = probs.data[:, None, :, :] * features.data[None, :, :, :]
    data.setflags(write=False)
    return WeightedTemplate(data, source_frame=source_frame)


def medial_summary(template, probs):
    """Probability-weighted mean feature per class, shape (2, C).

    A class whose probabilities sum to (numerically) zero gets the zero vector.
    """
    probs = probs if isinstance(probs, ProbabilityField) else ProbabilityField(probs)
    if probs.shape[1:] != template.data.shape[2:]:
        raise InvalidArgumentError("probability field does not match template size")
    totals = template.data.sum(axis=(2, 3))
    mass = probs.data.sum(axis=(1, 2))
    out = np.zeros_like(totals)
    for k in range(2):
        if mass[k] >= _EMPTY_CLASS:
            out[k] = totals[k] / mass[k]
    return out


def medial_update(state, summary, frame_index):
    """One EMA step; the first update (or frame 0) copies ``summary`` outright."""
    summary = np.asarray(summary, dtype=np.float64)
    if summary.shape != state.vectors.shape:
        raise InvalidArgumentError(f"summary shape {summary.shape} != {state.vectors.shape}")
    if not np.all(np.isfinite(summary)):
        raise InvalidInputError("summary contains non-finite values")
    if not state.initialized or frame_index == 0:
        vectors = summary.copy()
    else:
        a = state.alpha
        vectors = (1.0 - a) * state.vectors + a * summary
    return replace(state, vectors=vectors, initialized=True)
