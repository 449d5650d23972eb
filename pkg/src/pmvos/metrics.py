"""Region (J) and contour (F) accuracy for label masks, plus aggregation."""
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError

BOUNDARY_TOL_FRACTION = 0.0075


def _binary_pair(pred, gt, object_id):
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise InvalidArgumentError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    return pred == object_id, gt == object_id


def region_j(pred, gt, object_id=1):
    """Intersection over union of one object's masks (1 when both are empty)."""
    p, g = _binary_pair(pred, gt, object_id)
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return np.count_nonzero(p & g) / union


def boundary(mask):
    """Foreground pixels with a 4-neighbour outside the foreground or the image."""
    m = np.asarray(mask, dtype=bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return m & ~interior


def default_tolerance(shape):
    h, w = shape
    return max(1, math.ceil(BOUNDARY_TOL_FRACTION * math.hypot(h, w)))


def boundary_f(pred, gt, object_id=1, tolerance_px=None):
    """F-measure of boundary precision and recall within ``tolerance_px``.

    A boundary pixel counts as matched when some boundary pixel of the other
    mask lies within the tolerance disk (dilation test, many-to-one).
    """
    p, g = _binary_pair(pred, gt, object_id)
    if tolerance_px is None:
        tolerance_px = default_tolerance(p.shape)
    if tolerance_px < 0:
        raise InvalidArgumentError("tolerance must be non-negative")
    pb, gb = boundary(p), boundary(g)
    n_p, n_g = np.count_nonzero(pb), np.count_nonzero(gb)
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    precision = np.count_nonzero(pb & kernels.dilate_disk(gb, tolerance_px)) / n_p
    recall = np.count_nonzero(gb & kernels.dilate_disk(pb, tolerance_px)) / n_g
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class FrameScore:
    sequence: str
    object: int
    frame: int
    J: float
    F: float


@dataclass
class EvalReport:
    rows: list
    sequence_J: dict
    sequence_F: dict
    J: float
    F: float

    @property
    def JF(self):
        return (self.J + self.F) / 2


def evaluate_sequence(name, pred_labels, gt_labels, frames=None, tolerance_px=None):
    """Per-object, per-frame scores for one sequence.

    ``frames`` restricts scoring to annotated frame indices; objects are the
    labels 1..max found in the evaluated ground truth.
    """
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise InvalidArgumentError(f"prediction {pred_labels.shape} vs ground truth {gt_labels.shape}")
    frames = range(len(gt_labels)) if frames is None else sorted(frames)
    frames = list(frames)
    n_obj = int(max((gt_labels[t].max() for t in frames), default=0))
    rows = []
    for obj in range(1, n_obj + 1):
        for t in frames:
            rows.append(FrameScore(
                name, obj, int(t),
                float(region_j(pred_labels[t], gt_labels[t], obj)),
                float(boundary_f(pred_labels[t], gt_labels[t], obj, tolerance_px)),
            ))
    return rows


def jf_mean(rows):
    """Average over frames, then objects, then sequences."""
    rows = sorted(rows, key=lambda r: (r.sequence, r.object, r.frame))
    per_obj = defaultdict(list)
    for r in rows:
        per_obj[(r.sequence, r.object)].append(r)
    per_seq = defaultdict(list)
    for (seq, _), items in per_obj.items():
        per_seq[seq].append((np.mean([r.J for r in items]), np.mean([r.F for r in items])))
    seq_j = {s: float(np.mean([j for j, _ in v])) for s, v in per_seq.items()}
    seq_f = {s: float(np.mean([f for _, f in v])) for s, v in per_seq.items()}
    j = float(np.mean(list(seq_j.values()))) if seq_j else 0.0
    f = float(np.mean(list(seq_f.values()))) if seq_f else 0.0
    return EvalReport(rows, seq_j, seq_f, j, f)


def upsample_labels(labels, out_h, out_w):
    """Nearest-neighbour resize of a label field (cell centres map to source cells)."""
    labels = np.asarray(labels)
    h, w = labels.shape
    rows = np.minimum((np.arange(out_h) + 0.5) * h // out_h, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(out_w) + 0.5) * w // out_w, w - 1).astype(np.int64)
    return labels[np.ix_(rows, cols)]
