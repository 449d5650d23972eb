"""Per-pixel linear fusion head with cross-entropy loss and its gradient.

For class k the head sees that class's feature channels plus the class's
previous-frame probability, and emits one logit:

    logit_k(p) = w_k . [features_k(p), prev_k(p)] + b_k
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import ProbabilityField

# Below 1 so that a pixel whose similarity evidence flips between frames is
# not held at an exact tie by the propagated mask.
DEFAULT_PREV_WEIGHT = 0.5


@dataclass(frozen=True, eq=False)
class FusionParams:
    weights: np.ndarray  # (2, D)
    bias: np.ndarray  # (2,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != 2 or b.shape != (2,):
            raise InvalidArgumentError(f"bad parameter shapes {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("fusion parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def width(self):
        return self.weights.shape[1]

    @classmethod
    def default(cls, channels, prev_weight=None):
        """Unit weight on every similarity channel of a class, ``prev_weight`` on its previous mask."""
        w = np.ones((2, channels + 1))
        w[:, -1] = DEFAULT_PREV_WEIGHT if prev_weight is None else prev_weight
        return cls(w, np.zeros(2))

    def flat(self):
        return np.concatenate([self.weights.ravel(), self.bias])

    @classmethod
    def from_flat(cls, vec, width):
        vec = np.asarray(vec, dtype=np.float64)
        return cls(vec[: 2 * width].reshape(2, width), vec[2 * width:])

    def __add__(self, other):
        return FusionParams(self.weights + other.weights, self.bias + other.bias)

    def __mul__(self, scale):
        return FusionParams(self.weights * scale, self.bias * scale)

    __rmul__ = __mul__


def _inputs(features, prev_mask):
    feats = np.asarray(features, dtype=np.float64)
    prev = prev_mask.data if isinstance(prev_mask, ProbabilityField) else np.asarray(prev_mask, float)
    if feats.ndim != 4 or feats.shape[0] != 2:
        raise InvalidArgumentError(f"features must be (2, d, H, W), got {feats.shape}")
    if prev.shape != (2,) + feats.shape[2:]:
        raise InvalidArgumentError(f"previous mask {prev.shape} does not match features {feats.shape}")
    return np.concatenate([feats, prev[:, None]], axis=1)


def fuse(features, prev_mask, params):
    """(2, H, W) logits."""
    z = _inputs(features, prev_mask)
    if z.shape[1] != params.width:
        raise InvalidArgumentError(f"params expect {params.width} channels, inputs have {z.shape[1]}")
    return np.einsum("kd,kdhw->khw", params.weights, z) + params.bias[:, None, None]


def _log_softmax(logits):
    top = logits.max(axis=0, keepdims=True)
    shifted = logits - top
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def cross_entropy(logits, target):
    t = target.data if isinstance(target, ProbabilityField) else np.asarray(target, float)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != t.shape:
        raise InvalidArgumentError(f"logits {logits.shape} vs target {t.shape}")
    npix = logits.shape[1] * logits.shape[2]
    return float(-(t * _log_softmax(logits)).sum() / npix)


def gradient(features, prev_mask, target, params):
    """Analytic d(loss)/d(params), returned as a :class:`FusionParams`."""
    z = _inputs(features, prev_mask)
    t = target.data if isinstance(target, ProbabilityField) else np.asarray(target, float)
    logits = fuse(features, prev_mask, params)
    npix = logits.shape[1] * logits.shape[2]
    probs = np.exp(_log_softmax(logits))
    # d/dlogit_k of -sum_j t_j log s_j  =  s_k * sum_j t_j - t_k
    g = (probs * t.sum(axis=0, keepdims=True) - t) / npix
    return FusionParams(np.einsum("khw,kdhw->kd", g, z), g.sum(axis=(1, 2)))


def random_instance(rng):
    """A random (features, prev_mask, target, params) problem for gradient checks."""
    d = int(rng.integers(1, 7))
    h, w = (int(v) for v in rng.integers(2, 6, size=2))
    features = rng.uniform(-1.0, 1.0, size=(2, d, h, w))
    prev = rng.uniform(0.0, 1.0, size=(h, w))
    tgt = rng.uniform(0.0, 1.0, size=(h, w))
    params = FusionParams(rng.normal(size=(2, d + 1)), rng.normal(size=2))
    return (
        features,
        ProbabilityField(np.stack([1 - prev, prev])),
        ProbabilityField(np.stack([1 - tgt, tgt])),
        params,
    )


def finite_difference(features, prev_mask, target, params, h=1e-5):
    """Central-difference gradient, flattened like :meth:`FusionParams.flat`."""
    base = params.flat()
    out = np.empty_like(base)
    for i in range(base.size):
        up, down = base.copy(), base.copy()
        up[i] += h
        down[i] -= h
        f_up = cross_entropy(fuse(features, prev_mask, FusionParams.from_flat(up, params.width)), target)
        f_down = cross_entropy(fuse(features, prev_mask, FusionParams.from_flat(down, params.width)), target)
        out[i] = (f_up - f_down) / (2 * h)
    return out


def grad_check(seed, h=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    rng = np.random.Generator(np.random.PCG64(seed))
    features, prev, target, params = random_instance(rng)
    analytic = gradient(features, prev, target, params).flat()
    numeric = finite_difference(features, prev, target, params, h)
    rel = np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(rel.max())


def fit_params(features, prev_mask, target, params=None, lr=1.0, steps=200):
    """Plain gradient descent on the cross-entropy of one frame."""
    feats = np.asarray(features, dtype=np.float64)
    if params is None:
        params = FusionParams.default(feats.shape[1])
    for _ in range(steps):
        params = params + (-lr) * gradient(feats, prev_mask, target, params)
    return params
