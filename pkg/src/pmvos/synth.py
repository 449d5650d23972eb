"""Deterministic synthetic sequences and brute-force reference oracles.

The oracles here deliberately share no code with the production modules:
they use explicit Python loops and ``math.fsum`` so that agreement between
the two paths is evidence, not tautology. Only numpy is used for storage
and for the random generator (PCG64, seeded).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

MIN_SIGNATURE_ANGLE_DEG = 15.0


@dataclass
class Disk:
    center: tuple  # (row, col) at frame 0
    velocity: tuple = (0.0, 0.0)  # (rows, cols) per frame
    radius: float = 3.0
    signature: object = None  # optional explicit C-vector

    def center_at(self, t):
        return (self.center[0] + self.velocity[0] * t, self.center[1] + self.velocity[1] * t)

    def cover(self, t, h, w):
        cy, cx = self.center_at(t)
        ys, xs = np.mgrid[0:h, 0:w]
        return (ys - cy) ** 2 + (xs - cx) ** 2 <= self.radius ** 2


@dataclass
class SynthSpec:
    height: int = 24
    width: int = 24
    channels: int = 8
    frames: int = 10
    objects: list = field(default_factory=list)
    occluders: list = field(default_factory=list)
    background: object = None  # optional explicit background signature
    noise: float = 0.0
    drift: float = 0.0  # degrees of appearance rotation per frame, objects only
    seed: int = 0


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidArgumentError("signature must be non-zero")
    return v / n


def _validate(spec):
    if spec.height < 1 or spec.width < 1 or spec.channels < 1 or spec.frames < 1:
        raise InvalidArgumentError("grid size, channels and frame count must be positive")
    if not spec.objects:
        raise InvalidArgumentError("at least one object is required")
    if spec.noise < 0:
        raise InvalidArgumentError("noise amplitude must be non-negative")
    for disk in spec.occluders:
        if disk.radius <= 0:
            raise InvalidArgumentError("radius must be positive")
    # occluders may enter and leave the frame; tracked objects stay inside
    for disk in spec.objects:
        if disk.radius <= 0:
            raise InvalidArgumentError("radius must be positive")
        for t in (0, spec.frames - 1):
            cy, cx = disk.center_at(t)
            if (cy - disk.radius < 0 or cx - disk.radius < 0
                    or cy + disk.radius > spec.height - 1 or cx + disk.radius > spec.width - 1):
                raise InvalidArgumentError(f"disk at {disk.center} leaves the grid by frame {t}")


def _signatures(spec, rng):
    """Background, object and occluder signatures plus per-object drift directions.

    Missing signatures are vertices of a randomly rotated regular simplex
    (pairwise cosine -1/(K-1)); drift directions are orthogonal to all of them.
    """
    n_obj, n_occ = len(spec.objects), len(spec.occluders)
    k = 1 + n_obj + n_occ
    extra = n_obj if spec.drift else 0
    explicit = [spec.background] + [d.signature for d in spec.objects + spec.occluders]
    need_auto = any(s is None for s in explicit) or extra
    if need_auto and spec.channels < k + extra:
        raise InvalidArgumentError(
            f"{spec.channels} channels cannot host {k} generated signatures"
            + (" plus drift directions" if extra else "")
        )
    basis = None
    if need_auto:
        q, _ = np.linalg.qr(rng.standard_normal((spec.channels, k + extra)))
        simplex = np.eye(k) - 1.0 / k
        auto = (q[:, :k] @ simplex).T
        basis = q[:, k:]
    sigs = []
    for i, s in enumerate(explicit):
        if s is None:
            sigs.append(_unit(auto[i]))
        else:
            s = np.asarray(s, dtype=np.float64)
            if s.shape != (spec.channels,):
                raise InvalidArgumentError(f"signature must have {spec.channels} components")
            sigs.append(_unit(s))
    min_cos = math.cos(math.radians(MIN_SIGNATURE_ANGLE_DEG))
    for i in range(k):
        for j in range(i + 1, k):
            if float(sigs[i] @ sigs[j]) > min_cos + 1e-12:
                raise InvalidArgumentError("signatures must be at least 15 degrees apart")
    return sigs, basis


def gen_sequence(spec):
    """Return ``(frames, labels)``: (T, C, H, W) unit features and (T, H, W) labels.

    Objects carry labels 1..N; occluders are drawn on top and count as
    background in the labels.
    """
    _validate(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    sigs, drift_dirs = _signatures(spec, rng)
    bg = sigs[0]
    obj_sigs = sigs[1:1 + len(spec.objects)]
    occ_sigs = sigs[1 + len(spec.objects):]
    h, w, c = spec.height, spec.width, spec.channels
    frames = np.empty((spec.frames, c, h, w))
    labels = np.zeros((spec.frames, h, w), dtype=np.int64)
    theta = math.radians(spec.drift)
    for t in range(spec.frames):
        feat = np.broadcast_to(bg[:, None, None], (c, h, w)).copy()
        for i, (disk, sig) in enumerate(zip(spec.objects, obj_sigs)):
            if spec.drift:
                sig = math.cos(theta * t) * sig + math.sin(theta * t) * drift_dirs[:, i]
            cover = disk.cover(t, h, w)
            feat[:, cover] = sig[:, None]
            labels[t][cover] = i + 1
        for disk, sig in zip(spec.occluders, occ_sigs):
            cover = disk.cover(t, h, w)
            feat[:, cover] = sig[:, None]
            labels[t][cover] = 0
        if spec.noise:
            feat += rng.uniform(-spec.noise, spec.noise, size=feat.shape)
        norms = np.sqrt((feat * feat).sum(axis=0))
        frames[t] = np.where(norms > 0, feat / np.where(norms > 0, norms, 1.0), 0.0)
    return frames, labels


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def _raw(obj):
    return np.asarray(getattr(obj, "data", obj), dtype=np.float64)


def oracle_match(features, template):
    """Triple loop: max over template pixels of <x(p), Y_k(q)>, per class."""
    x = _raw(features)
    y = _raw(template)
    c, h, w = x.shape
    _, _, th, tw = y.shape
    out = np.zeros((2, h, w))
    for k in range(2):
        for i in range(h):
            for j in range(w):
                xp = [float(x[ch, i, j]) for ch in range(c)]
                best = None
                for a in range(th):
                    for b in range(tw):
                        s = 0.0
                        for ch in range(c):
                            s += xp[ch] * float(y[k, ch, a, b])
                        if best is None or s > best:
                            best = s
                out[k, i, j] = best
    return out


def _softmax_row(values):
    top = max(values)
    exps = [math.exp(v - top) for v in values]
    total = math.fsum(exps)
    return [e / total for e in exps]


def oracle_affinity(stack, kind):
    """Dense row-softmax Gram affinity as nested lists."""
    arr = _raw(stack)
    n = arr.shape[0]
    if kind == "spatial":
        vecs = [[float(arr[ch].flat[p]) for ch in range(n)] for p in range(arr[0].size)]
    elif kind == "channel":
        vecs = [[float(v) for v in arr[ch].ravel()] for ch in range(n)]
    else:
        raise ValueError(f"unknown attention kind {kind!r}")
    energy = [[math.fsum(a * b for a, b in zip(u, v)) for v in vecs] for u in vecs]
    return [_softmax_row(row) for row in energy], vecs


def oracle_attention(stack, gamma, kind):
    arr = _raw(stack)
    n, h, w = arr.shape
    rows, vecs = oracle_affinity(arr, kind)
    out = np.empty_like(arr)
    if kind == "spatial":
        for p in range(h * w):
            for ch in range(n):
                v = math.fsum(rows[p][q] * vecs[q][ch] for q in range(h * w))
                out[ch].flat[p] = gamma * v + arr[ch].flat[p]
    else:
        for ch in range(n):
            for p in range(h * w):
                v = math.fsum(rows[ch][o] * vecs[o][p] for o in range(n))
                out[ch].flat[p] = gamma * v + arr[ch].flat[p]
    return out


def _boundary_pixels(mask):
    h, w = len(mask), len(mask[0])
    pts = []
    for i in range(h):
        for j in range(w):
            if not mask[i][j]:
                continue
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                a, b = i + di, j + dj
                if a < 0 or b < 0 or a >= h or b >= w or not mask[a][b]:
                    pts.append((i, j))
                    break
    return pts


def _max_matching(left, right, tol):
    """Kuhn's augmenting-path maximum-cardinality bipartite matching."""
    adj = [
        [r for r, (b0, b1) in enumerate(right) if (a0 - b0) ** 2 + (a1 - b1) ** 2 <= tol * tol]
        for (a0, a1) in left
    ]
    match_right = [-1] * len(right)

    def augment(u, seen):
        for v in adj[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] == -1 or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    return sum(augment(u, [False] * len(right)) for u in range(len(left)))


def oracle_boundary_f(pred, gt, tolerance, object_id=1):
    """Boundary F from a one-to-one maximum matching of boundary pixels."""
    p = (np.asarray(pred) == object_id).tolist()
    g = (np.asarray(gt) == object_id).tolist()
    pb, gb = _boundary_pixels(p), _boundary_pixels(g)
    if not pb and not gb:
        return 1.0
    if not pb or not gb:
        return 0.0
    matched = _max_matching(pb, gb, tolerance)
    precision = matched / len(pb)
    recall = matched / len(gb)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def oracle_ema(summaries, alpha):
    """Closed-form EMA: s_0 enters with weight (1-a)^(n-1), s_j with a(1-a)^(n-1-j)."""
    s = [np.asarray(v, dtype=np.float64) for v in summaries]
    n = len(s)
    if n == 0:
        raise ValueError("need at least one summary")
    weights = [(1 - alpha) ** (n - 1)] + [alpha * (1 - alpha) ** (n - 1 - j) for j in range(1, n)]
    flat = [v.ravel() for v in s]
    out = np.array([math.fsum(wt * v[i] for wt, v in zip(weights, flat)) for i in range(flat[0].size)])
    return out.reshape(s[0].shape)


def occlusion_suite(count=10, noise=0.3, drift=8.0, frames=12, size=24, channels=8,
                    seed=0, occluder_scale=0.8):
    """Seeded single-object sequences, each with one occlusion event.

    The target translates horizontally while its appearance rotates by
    ``drift`` degrees per frame. A distractor disk, visible from frame 0 at
    the top or bottom of the grid, moves vertically so that it sits on the
    target's centre at the middle frame.
    """
    specs = []
    mid = frames // 2
    for s in range(count):
        rng = np.random.Generator(np.random.PCG64([seed, s]))
        r = float(rng.uniform(3.5, 4.5))
        cy = float(rng.uniform(r + 1.5, size - r - 2.5))
        vx = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0))
        cx = r + 1 if vx > 0 else size - r - 2
        orad = occluder_scale * r
        oy0 = orad + 0.5 if cy > size / 2 else size - 1 - orad - 0.5
        occluder = Disk((oy0, cx + vx * mid), ((cy - oy0) / mid, 0.0), orad)
        specs.append(SynthSpec(size, size, channels, frames, [Disk((cy, cx), (0.0, vx), r)],
                               [occluder], noise=noise, drift=drift, seed=seed * 1000 + s))
    return specs
