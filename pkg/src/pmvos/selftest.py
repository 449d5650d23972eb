"""Oracle-equivalence suites behind ``pmvos selftest``.

Each suite returns ``(name, passed, detail)``. ``quick`` shrinks instance
counts so the command finishes in a few seconds; the acceptance tests run
the full counts.
"""
import numpy as np

from .attention import channel_attention, spatial_attention
from .fusion import grad_check
from .grid import FeatureGrid, ProbabilityField, l2_normalize_pixels
from .matching import match_grid
from .metrics import boundary_f, evaluate_sequence, jf_mean, region_j
from .synth import (
    Disk,
    SynthSpec,
    gen_sequence,
    oracle_attention,
    oracle_boundary_f,
    oracle_ema,
    oracle_match,
)
from .templates import MedialTemplate, medial_update, weighted_template
from .tracker import TrackerConfig, run_multiobject


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def random_match_instance(rng):
    c = int(rng.integers(1, 9))
    h, w, th, tw = (int(v) for v in rng.integers(1, 9, size=4))
    x = l2_normalize_pixels(FeatureGrid(rng.normal(size=(c, h, w))))
    tx = l2_normalize_pixels(FeatureGrid(rng.normal(size=(c, th, tw))))
    fg = rng.uniform(size=(th, tw))
    return x, weighted_template(tx, ProbabilityField(np.stack([1 - fg, fg])))


def random_label_mask(rng, shape):
    return (rng.uniform(size=shape) < rng.uniform(0.2, 0.8)).astype(np.int64)


def suite_matching(count):
    rng = _rng(1)
    worst = 0.0
    for _ in range(count):
        x, tpl = random_match_instance(rng)
        worst = max(worst, float(np.abs(match_grid(x, tpl) - oracle_match(x, tpl)).max()))
    return "matching vs oracle", worst <= 1e-6, f"max |diff| = {worst:.2e} over {count} instances"


def suite_attention(count):
    rng = _rng(2)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 4))
        h, w = (int(v) for v in rng.integers(1, 7, size=2))
        stack = rng.uniform(-1, 1, size=(n, h, w))
        gamma = float(rng.uniform(0, 2))
        worst = max(
            worst,
            float(np.abs(spatial_attention(stack, gamma) - oracle_attention(stack, gamma, "spatial")).max()),
            float(np.abs(channel_attention(stack, gamma) - oracle_attention(stack, gamma, "channel")).max()),
        )
    return "attention vs oracle", worst <= 1e-6, f"max |diff| = {worst:.2e} over {count} stacks"


def suite_completeness(count):
    rng = _rng(3)
    worst = 0.0
    for _ in range(count):
        c, h, w = (int(v) for v in rng.integers(1, 9, size=3))
        x = l2_normalize_pixels(FeatureGrid(rng.normal(size=(c, h, w))))
        fg = rng.uniform(size=(h, w))
        tpl = weighted_template(x, ProbabilityField(np.stack([1 - fg, fg])))
        worst = max(worst, float(np.abs(tpl.data[0] + tpl.data[1] - x.data).max()))
    return "weighted-template completeness", worst <= 1e-6, f"max |diff| = {worst:.2e}"


def suite_ema(max_updates):
    rng = _rng(4)
    worst = 0.0
    for alpha in (0.05, 0.1, 0.5, 1.0):
        summaries = rng.normal(size=(max_updates, 2, 5))
        state = MedialTemplate.empty(5, alpha)
        for i in range(max_updates):
            state = medial_update(state, summaries[i], i)
            worst = max(worst, float(np.abs(state.vectors - oracle_ema(summaries[: i + 1], alpha)).max()))
    return "EMA closed form", worst <= 1e-9, f"max |diff| = {worst:.2e}"


def suite_gradients(seeds):
    worst = max(grad_check(s) for s in range(seeds))
    return "fusion gradients", worst < 1e-4, f"max relative error = {worst:.2e} over {seeds} seeds"


def suite_boundary(count, tolerance):
    rng = _rng(5 + int(tolerance))
    mismatches, worst = 0, 0.0
    for _ in range(count):
        shape = tuple(int(v) for v in rng.integers(1, 9, size=2))
        p, g = random_label_mask(rng, shape), random_label_mask(rng, shape)
        d = abs(boundary_f(p, g, 1, tolerance) - oracle_boundary_f(p, g, tolerance))
        worst = max(worst, d)
        mismatches += d > 1e-9
    return (f"boundary F vs bipartite oracle (tol {tolerance:g})", mismatches == 0,
            f"{mismatches}/{count} masks differ, max |diff| = {worst:.3f}")


def suite_region():
    a = np.zeros((4, 4), int)
    a[0:2, 0:2] = 1
    b = np.zeros((4, 4), int)
    b[0:2, 1:3] = 1
    c = np.zeros((4, 4), int)
    c[2:4, 2:4] = 1
    ok = region_j(a, a) == 1.0 and region_j(a, c) == 0.0 and region_j(a, b) == 2 / 6
    return "region J hand cases", ok, "identity, disjoint, 2/6 overlap"


def anchor_spec(frames=10):
    return SynthSpec(24, 24, 8, frames, [Disk((8.0, 6.0), (0.5, 1.0), 4.0)], noise=0.0, seed=0)


def suite_anchor():
    frames, labels = gen_sequence(anchor_spec())
    pred = run_multiobject(frames, labels[0], TrackerConfig(mode="G"))
    jf = jf_mean(evaluate_sequence("anchor", pred, labels)).JF
    return "noise-free G-mode anchor", jf == 1.0, f"J&F = {jf:.6f}"


def run_all(quick=True):
    n = 20 if quick else 200
    return [
        suite_matching(n),
        suite_attention(n),
        suite_completeness(n // 2),
        suite_ema(50),
        suite_gradients(10 if quick else 100),
        suite_boundary(100 if quick else 1000, 0),
        suite_boundary(100 if quick else 1000, 1),
        suite_region(),
        suite_anchor(),
    ]
