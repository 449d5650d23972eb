"""Pixel-level matching against weighted templates.

Each input pixel is compared with every template pixel of a class by the
dot product of its unit feature with the probability-weighted template
feature (a cosine scaled by the template pixel's class probability); the
best score over the template becomes that pixel's similarity.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, PreconditionError
from .grid import FeatureGrid, l2_normalize_pixels

KINDS = ("medial", "global", "local")


@dataclass(frozen=True, eq=False)
class SimilarityStack:
    """``maps[k, j]`` is the H x W map of class k for matching kind ``kinds[j]``."""

    kinds: tuple
    maps: np.ndarray

    @property
    def depth(self):
        return len(self.kinds)

    def for_class(self, k):
        return self.maps[k]

    def kind(self, name):
        return self.maps[:, self.kinds.index(name)]


def _normalized(features):
    if not isinstance(features, FeatureGrid):
        features = FeatureGrid(features)
    return features if features.normalized else l2_normalize_pixels(features)


def match_grid(features, template):
    """(2, H, W) similarity maps of ``features`` against a weighted template."""
    features = _normalized(features)
    if features.channels != template.channels:
        raise InvalidArgumentError(
            f"channel mismatch: input {features.channels}, template {template.channels}"
        )
    x = features.pixels()
    out = np.empty((2, features.height, features.width))
    for k in range(2):
        out[k] = kernels.max_dot(x, template.pixels(k)).reshape(features.height, features.width)
    return out


def match_vector(features, medial):
    """(2, H, W) maps of ``features`` against the per-class medial vectors."""
    if not medial.initialized:
        raise PreconditionError("medial template has not been initialized")
    features = _normalized(features)
    if features.channels != medial.vectors.shape[1]:
        raise InvalidArgumentError("channel mismatch between input and medial template")
    return np.einsum("kc,chw->khw", medial.vectors, features.data)


def match_all(features, bank, enabled):
    """Stack the enabled matching kinds in (medial, global, local) order."""
    enabled = set(enabled)
    if not enabled:
        raise InvalidArgumentError("at least one matching kind must be enabled")
    unknown = enabled - set(KINDS)
    if unknown:
        raise InvalidArgumentError(f"unknown matching kinds: {sorted(unknown)}")
    features = _normalized(features)
    kinds = tuple(k for k in KINDS if k in enabled)
    maps = []
    for kind in kinds:
        if kind == "medial":
            maps.append(match_vector(features, bank.medial))
        elif kind == "global":
            maps.append(match_grid(features, bank.global_))
        else:
            maps.append(match_grid(features, bank.local))
    return SimilarityStack(kinds, np.stack(maps, axis=1))
