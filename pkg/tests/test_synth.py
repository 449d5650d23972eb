import numpy as np
import pytest

from pmvos.errors import InvalidArgumentError
from pmvos.synth import Disk, SynthSpec, gen_sequence, occlusion_suite, oracle_ema


def test_noise_free_features_identical_inside_object():
    frames, labels = gen_sequence(SynthSpec(16, 16, 6, 4, [Disk((8.0, 8.0), (0.0, 0.0), 3.0)]))
    for t in range(4):
        inside = frames[t][:, labels[t] == 1]
        np.testing.assert_allclose(inside, inside[:, :1].repeat(inside.shape[1], axis=1))


def test_unit_norm_features():
    frames, _ = gen_sequence(SynthSpec(12, 12, 5, 3, [Disk((6.0, 6.0), (0.0, 0.0), 2.0)], noise=0.4, seed=2))
    np.testing.assert_allclose(np.linalg.norm(frames, axis=1), 1.0)


def test_deterministic():
    spec = SynthSpec(12, 12, 5, 3, [Disk((6.0, 6.0), (0.0, 0.0), 2.0)], noise=0.4, seed=9)
    a, b = gen_sequence(spec), gen_sequence(spec)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_centroid_moves_with_velocity():
    _, labels = gen_sequence(SynthSpec(24, 24, 8, 5, [Disk((12.0, 6.0), (0.0, 1.0), 3.0)]))
    cols = [np.argwhere(l == 1)[:, 1].mean() for l in labels]
    np.testing.assert_allclose(np.diff(cols), 1.0)


def test_occluder_hides_object():
    spec = SynthSpec(16, 16, 8, 1, [Disk((8.0, 8.0), (0.0, 0.0), 4.0)], [Disk((8.0, 8.0), (0.0, 0.0), 2.0)])
    _, labels = gen_sequence(spec)
    assert labels[0, 8, 8] == 0 and labels[0, 8, 5] == 1


@pytest.mark.parametrize("spec", [
    SynthSpec(16, 16, 4, 3, []),
    SynthSpec(16, 16, 4, 3, [Disk((1.0, 8.0), (0.0, 0.0), 3.0)]),
    SynthSpec(16, 16, 4, 3, [Disk((8.0, 8.0), (0.0, 5.0), 3.0)]),
    SynthSpec(16, 16, 4, 3, [Disk((8.0, 8.0), (0.0, 0.0), 3.0)], noise=-1.0),
    SynthSpec(16, 16, 2, 3, [Disk((8.0, 8.0), (0.0, 0.0), 3.0)] * 2),
    SynthSpec(16, 16, 3, 3, [Disk((8.0, 8.0), (0.0, 0.0), 3.0, signature=[1, 0, 0])],
              background=[1, 0.1, 0]),
])
def test_invalid_specs(spec):
    with pytest.raises(InvalidArgumentError):
        gen_sequence(spec)


def test_occluder_may_leave_grid():
    spec = SynthSpec(16, 16, 8, 3, [Disk((8.0, 8.0), (0.0, 0.0), 3.0)], [Disk((0.0, 8.0), (-2.0, 0.0), 2.0)])
    gen_sequence(spec)


def test_oracle_ema_cases():
    s = np.array([[1.0], [3.0]])
    assert oracle_ema(s, 0.5)[0] == pytest.approx(2.0)
    assert oracle_ema(s, 1.0)[0] == pytest.approx(3.0)
    assert oracle_ema(s[:1], 0.1)[0] == pytest.approx(1.0)


def test_occlusion_suite_is_valid():
    for spec in occlusion_suite(count=4):
        frames, labels = gen_sequence(spec)
        assert np.count_nonzero(labels[0]) > 0
        mid = spec.frames // 2
        assert np.count_nonzero(labels[mid]) < np.count_nonzero(labels[0])
