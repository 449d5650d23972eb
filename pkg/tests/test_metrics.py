import numpy as np
import pytest

from pmvos.errors import InvalidArgumentError
from pmvos.metrics import (
    FrameScore,
    boundary,
    boundary_f,
    default_tolerance,
    evaluate_sequence,
    jf_mean,
    region_j,
    upsample_labels,
)
from pmvos.selftest import random_label_mask
from pmvos.synth import oracle_boundary_f


def square(shape, r0, c0, size):
    m = np.zeros(shape, dtype=np.int64)
    m[r0:r0 + size, c0:c0 + size] = 1
    return m


def test_region_hand_cases():
    a = square((4, 4), 0, 0, 2)
    assert region_j(a, a) == 1.0
    assert region_j(a, square((4, 4), 2, 2, 2)) == 0.0
    assert region_j(a, square((4, 4), 0, 1, 2)) == pytest.approx(2 / 6)
    assert region_j(np.zeros((3, 3)), np.zeros((3, 3))) == 1.0


def test_region_symmetric(rng):
    for _ in range(20):
        p, g = random_label_mask(rng, (6, 7)), random_label_mask(rng, (6, 7))
        assert region_j(p, g) == region_j(g, p)


def test_region_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        region_j(np.zeros((2, 2)), np.zeros((2, 3)))


def test_boundary_of_square():
    b = boundary(square((5, 5), 1, 1, 3))
    assert np.count_nonzero(b) == 8 and not b[2, 2]


def test_boundary_f_identity_and_empty():
    a = square((6, 6), 1, 1, 3)
    assert boundary_f(a, a, tolerance_px=0) == 1.0
    assert boundary_f(np.zeros((6, 6)), np.zeros((6, 6))) == 1.0
    assert boundary_f(a, np.zeros((6, 6))) == 0.0


def test_shifted_square_within_tolerance():
    a = square((8, 8), 2, 2, 4)
    b = square((8, 8), 2, 3, 4)
    assert boundary_f(a, b, tolerance_px=1) == 1.0
    assert oracle_boundary_f(a, b, 1) == 1.0
    assert boundary_f(a, b, tolerance_px=0) < 1.0


def test_isometry_invariance(rng):
    for _ in range(20):
        p, g = random_label_mask(rng, (7, 7)), random_label_mask(rng, (7, 7))
        base = boundary_f(p, g, tolerance_px=1)
        for k in range(4):
            assert boundary_f(np.rot90(p, k), np.rot90(g, k), tolerance_px=1) == pytest.approx(base)
        assert boundary_f(p.T, g.T, tolerance_px=1) == pytest.approx(base)


def test_tolerance_zero_equals_oracle(rng):
    for _ in range(100):
        shape = tuple(int(v) for v in rng.integers(1, 9, size=2))
        p, g = random_label_mask(rng, shape), random_label_mask(rng, shape)
        assert boundary_f(p, g, 1, 0) == pytest.approx(oracle_boundary_f(p, g, 0), abs=1e-9)


def test_tolerance_one_can_exceed_one_to_one_oracle():
    # three prediction boundary pixels all sit next to one ground-truth pixel
    gt = np.zeros((3, 3), dtype=np.int64)
    gt[1, 1] = 1
    pred = np.zeros((3, 3), dtype=np.int64)
    pred[1, 0:3] = 1
    assert boundary_f(pred, gt, tolerance_px=1) == 1.0
    assert oracle_boundary_f(pred, gt, 1) == pytest.approx(0.5)


def test_default_tolerance():
    assert default_tolerance((24, 24)) == 1
    assert default_tolerance((480, 854)) == 8


def test_negative_tolerance():
    with pytest.raises(InvalidArgumentError):
        boundary_f(np.zeros((2, 2)), np.zeros((2, 2)), tolerance_px=-1)


def test_jf_mean_two_frames():
    rows = [FrameScore("s", 1, 0, 0.8, 0.6), FrameScore("s", 1, 1, 0.8, 0.6)]
    report = jf_mean(rows)
    assert report.J == pytest.approx(0.8)
    assert report.F == pytest.approx(0.6)
    assert report.JF == pytest.approx(0.7)


def test_jf_mean_hierarchical():
    rows = [
        FrameScore("a", 1, 0, 1.0, 1.0), FrameScore("a", 1, 1, 0.0, 0.0), FrameScore("a", 2, 0, 1.0, 1.0),
        FrameScore("b", 1, 0, 0.2, 0.4),
        FrameScore("c", 1, 0, 0.6, 0.8), FrameScore("c", 1, 1, 0.6, 0.8), FrameScore("c", 1, 2, 0.6, 0.8),
    ]
    report = jf_mean(rows)
    assert report.sequence_J == pytest.approx({"a": 0.75, "b": 0.2, "c": 0.6})
    assert report.J == pytest.approx((0.75 + 0.2 + 0.6) / 3)
    assert report.F == pytest.approx((0.75 + 0.4 + 0.8) / 3)


def test_evaluate_sequence_frames_subset():
    gt = np.stack([square((6, 6), 1, 1, 3)] * 3)
    pred = gt.copy()
    pred[1] = 0
    rows = evaluate_sequence("s", pred, gt, frames=[0, 2])
    assert [r.frame for r in rows] == [0, 2]
    assert all(r.J == 1.0 for r in rows)


def test_upsample_labels():
    np.testing.assert_array_equal(upsample_labels(np.array([[1, 2], [3, 0]]), 4, 4),
                                  np.repeat(np.repeat([[1, 2], [3, 0]], 2, 0), 2, 1))
