"""Frame-by-frame segmentation loop.

Modes mirror the ablation ladder: ``G`` global matching only, ``GL`` adds
local matching, ``GLM`` adds medial matching, ``GLMA`` adds self-attention
on the similarity maps. Per frame the loop is

    match -> [attend] -> fuse with previous mask -> softmax
          -> rebuild local template -> update medial template

The global template is built once from the annotated first frame.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .attention import DEFAULT_GAMMA, attend
from .errors import EmptyTargetError, InvalidArgumentError
from .fusion import FusionParams, fit_params, fuse
from .grid import FeatureGrid, ProbabilityField, l2_normalize_pixels, resize_probability, softmax_channels
from .matching import match_all
from .templates import (
    DEFAULT_ALPHA,
    MedialTemplate,
    TemplateBank,
    medial_summary,
    medial_update,
    weighted_template,
)

MODES = {
    "G": frozenset({"global"}),
    "GL": frozenset({"global", "local"}),
    "GLM": frozenset({"medial", "global", "local"}),
    "GLMA": frozenset({"medial", "global", "local"}),
}


@dataclass(frozen=True)
class TrackerConfig:
    mode: str = "GLM"
    alpha: float = DEFAULT_ALPHA
    gamma_spatial: float = DEFAULT_GAMMA
    gamma_channel: float = DEFAULT_GAMMA
    # "default", "fit", or an explicit FusionParams
    fusion: object = "default"
    fit_steps: int = 200
    fit_lr: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (isinstance(self.fusion, FusionParams) or self.fusion in ("default", "fit")):
            raise InvalidArgumentError(f"unknown fusion source {self.fusion!r}")

    @property
    def kinds(self):
        return MODES[self.mode]

    @property
    def attention(self):
        return self.mode == "GLMA"

    @property
    def feature_width(self):
        """Channels per class entering the fusion head (excluding the previous mask)."""
        n = len(self.kinds)
        return 2 * n if self.attention else n


@dataclass(frozen=True, eq=False)
class TrackerState:
    bank: TemplateBank
    prev_probs: ProbabilityField
    frame_index: int
    params: FusionParams = field(default=None)


def _features(frame):
    grid = frame if isinstance(frame, FeatureGrid) else FeatureGrid(frame)
    return grid if grid.normalized else l2_normalize_pixels(grid)


def _as_probs(mask):
    if isinstance(mask, ProbabilityField):
        return mask
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim == 2:
        return ProbabilityField.from_mask(arr)
    return ProbabilityField(arr)


def _head_inputs(features, bank, config):
    stack = match_all(features, bank, config.kinds)
    if config.attention:
        return attend(stack, config.gamma_spatial, config.gamma_channel).data
    return stack.maps


def init(features_0, gt_mask_0, config=None):
    """Build templates from the annotated first frame."""
    config = config or TrackerConfig()
    x = _features(features_0)
    gt = _as_probs(gt_mask_0)
    if gt.classes != 2:
        raise InvalidArgumentError("initial mask must have exactly two classes")
    if not np.any(gt.foreground > 0):
        raise EmptyTargetError("initial mask has no foreground pixels")
    m = resize_probability(gt, x.height, x.width)
    template = weighted_template(x, m, source_frame=0)
    medial = medial_update(MedialTemplate.empty(x.channels, config.alpha), medial_summary(template, m), 0)
    bank = TemplateBank(global_=template, local=template, medial=medial)

    if isinstance(config.fusion, FusionParams):
        params = config.fusion
    else:
        params = FusionParams.default(config.feature_width)
        if config.fusion == "fit":
            # calibrate on frame 0 with an uninformative previous mask so the
            # weights learn from similarity evidence rather than copying the target
            uniform = ProbabilityField(np.full((2, x.height, x.width), 0.5))
            params = fit_params(_head_inputs(x, bank, config), uniform, m, params,
                                lr=config.fit_lr, steps=config.fit_steps)
    if params.width != config.feature_width + 1:
        raise InvalidArgumentError(
            f"fusion params have width {params.width}, mode {config.mode} needs {config.feature_width + 1}"
        )
    return TrackerState(bank=bank, prev_probs=m, frame_index=0, params=params)


def step(state, features_i, config=None):
    """Segment one frame; returns ``(mask, new_state)``."""
    config = config or TrackerConfig()
    x = _features(features_i)
    if (x.height, x.width) != (state.prev_probs.height, state.prev_probs.width):
        raise InvalidArgumentError("frame size differs from the tracked feature size")
    logits = fuse(_head_inputs(x, state.bank, config), state.prev_probs, state.params)
    mask = softmax_channels(logits)

    index = state.frame_index + 1
    local = weighted_template(x, mask, source_frame=index)
    medial = medial_update(state.bank.medial, medial_summary(local, mask), index)
    bank = replace(state.bank, local=local, medial=medial)
    return mask, replace(state, bank=bank, prev_probs=mask, frame_index=index)


def run_sequence(frames, gt_mask_0, config=None):
    """Masks for every frame; the first entry echoes the given annotation."""
    frames = list(frames)
    if not frames:
        raise InvalidArgumentError("sequence is empty")
    config = config or TrackerConfig()
    gt = _as_probs(gt_mask_0)
    state = init(frames[0], gt, config)
    masks = [gt]
    for frame in frames[1:]:
        mask, state = step(state, frame, config)
        masks.append(mask)
    return masks


def labels_from_foreground(fg_maps):
    """Pixel label = 1 + argmax over objects, or 0 when every object is below 0.5."""
    fg = np.asarray(fg_maps, dtype=np.float64)
    best = np.argmax(fg, axis=0)
    top = np.take_along_axis(fg, best[None], axis=0)[0]
    return np.where(top >= 0.5, best + 1, 0).astype(np.int64)


def _split_objects(gt_masks_0):
    if isinstance(gt_masks_0, np.ndarray) and gt_masks_0.ndim == 2 and gt_masks_0.dtype.kind in "iub":
        labels = gt_masks_0.astype(np.int64)
        return [(labels == k).astype(np.float64) for k in range(1, int(labels.max()) + 1)]
    masks = [np.asarray(m, dtype=np.float64) for m in gt_masks_0]
    if not masks:
        raise InvalidArgumentError("no objects given")
    if any(m.shape != masks[0].shape for m in masks):
        raise InvalidArgumentError("object masks differ in size")
    if np.any(np.sum([m > 0 for m in masks], axis=0) > 1):
        raise InvalidArgumentError("initial object masks overlap")
    return masks


def run_multiobject(frames, gt_masks_0, config=None):
    """(T, H, W) label fields from one independent tracker per object."""
    frames = list(frames)
    objects = _split_objects(gt_masks_0)
    per_object = [run_sequence(frames, m, config) for m in objects]
    h, w = _features(frames[0]).shape[1:]
    out = []
    for t in range(len(frames)):
        fg = [resize_probability(masks[t], h, w).foreground for masks in per_object]
        out.append(labels_from_foreground(fg))
    return np.stack(out)
