"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

The public functions here dispatch on :func:`pmvos._backend.use_numba`.
Both flavours compute the same quantities in the same block order; they
may differ only by floating-point rounding inside the dot products.
"""
import numpy as np

from ._backend import njit, use_numba

# Rows of the input-pixel matrix processed per block. 1024 x Q float64
# stays well inside L2 for the template sizes the tracker produces.
BLOCK_ROWS = 1024


# ---------------------------------------------------------------------------
# max-dot reduction: out[p] = max_q <x_p, y_q>
# ---------------------------------------------------------------------------

def _max_dot_numpy(x, y, block):
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    yt = np.ascontiguousarray(y.T)
    for start in range(0, n, block):
        stop = min(start + block, n)
        out[start:stop] = (x[start:stop] @ yt).max(axis=1)
    return out


@njit(cache=False)
def _max_dot_numba(x, y, block):
    # scores are laid out (Q, rows) so the max runs over contiguous,
    # independent lanes and the compiler can vectorize it
    n = x.shape[0]
    q = y.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, block):
        stop = min(start + block, n)
        scores = np.dot(y, np.ascontiguousarray(x[start:stop].T))
        best = scores[0].copy()
        for j in range(1, q):
            row = scores[j]
            for i in range(stop - start):
                v = row[i]
                best[i] = v if v > best[i] else best[i]
        out[start:stop] = best
    return out


def max_dot(x, y, block=BLOCK_ROWS):
    """Max over rows of ``y`` of the dot product with each row of ``x``.

    ``x`` is (P, C), ``y`` is (Q, C) with Q >= 1; returns a (P,) array.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape[0] == 0:
        raise ValueError("template set is empty")
    if use_numba():
        return _max_dot_numba(x, y, block)
    return _max_dot_numpy(x, y, block)


# ---------------------------------------------------------------------------
# spatial self-attention: out_i = sum_j softmax_j(<f_i, f_j>) f_j
# ---------------------------------------------------------------------------

def _attend_rows_numpy(f, block):
    p = f.shape[0]
    out = np.empty_like(f)
    ft = np.ascontiguousarray(f.T)
    for start in range(0, p, block):
        stop = min(start + block, p)
        energy = f[start:stop] @ ft
        energy -= energy.max(axis=1, keepdims=True)
        np.exp(energy, out=energy)
        energy /= energy.sum(axis=1, keepdims=True)
        out[start:stop] = energy @ f
    return out


@njit(cache=False)
def _attend_rows_numba(f, block):
    p, n = f.shape
    out = np.empty_like(f)
    ft = np.ascontiguousarray(f.T)
    for start in range(0, p, block):
        stop = min(start + block, p)
        energy = np.dot(np.ascontiguousarray(f[start:stop]), ft)
        for i in range(stop - start):
            row = energy[i]
            top = row.max()
            total = 0.0
            for j in range(p):
                e = np.exp(row[j] - top)
                row[j] = e
                total += e
            row /= total
        out[start:stop] = np.dot(energy, f)
    return out


def attend_rows(f, block=BLOCK_ROWS):
    """Row-softmax Gram attention over the rows of ``f`` (P, n)."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if use_numba():
        return _attend_rows_numba(f, block)
    return _attend_rows_numpy(f, block)


# ---------------------------------------------------------------------------
# binary dilation by a Euclidean disk
# ---------------------------------------------------------------------------

def disk_offsets(radius):
    """Integer (dy, dx) offsets with dy^2 + dx^2 <= radius^2."""
    r = int(np.floor(radius))
    ys, xs = np.mgrid[-r:r + 1, -r:r + 1]
    keep = ys * ys + xs * xs <= radius * radius
    return np.stack([ys[keep], xs[keep]], axis=1).astype(np.int64)


def _dilate_numpy(mask, offsets):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for dy, dx in offsets:
        ys0, ys1 = max(0, dy), min(h, h + dy)
        xs0, xs1 = max(0, dx), min(w, w + dx)
        if ys0 >= ys1 or xs0 >= xs1:
            continue
        out[ys0:ys1, xs0:xs1] |= mask[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
    return out


@njit(cache=False)
def _dilate_numba(mask, offsets):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for k in range(offsets.shape[0]):
                yy = y + offsets[k, 0]
                xx = x + offsets[k, 1]
                if 0 <= yy < h and 0 <= xx < w:
                    out[yy, xx] = True
    return out


def dilate_disk(mask, radius):
    """Set every pixel within Euclidean distance ``radius`` of a true pixel."""
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    offsets = disk_offsets(radius)
    if use_numba():
        return _dilate_numba(mask, offsets)
    return _dilate_numpy(mask, offsets)
