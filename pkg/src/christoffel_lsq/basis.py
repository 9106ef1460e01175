"""Tensor-product real trigonometric system on [0, 1]^d.

Univariate modes are numbered from 0::

    mode 0      -> 1
    mode 2l - 1 -> sqrt(2) cos(2 pi l x)
    mode 2l     -> sqrt(2) sin(2 pi l x)

A d-variate basis function is a product of univariate modes, one per
coordinate, and is identified by its mode tuple (a multi-index).  The
system is orthonormal in L2([0, 1]^d, dx).
"""

import heapq
import itertools
import math

import numpy as np

SQRT2 = math.sqrt(2.0)

# 2**-40 < 1e-12: bisection steps needed for 1e-12 accuracy on a unit bracket.
BISECTION_STEPS = 40


def frequency(mode):
    return (np.asarray(mode) + 1) // 2


def trig_table(x, max_mode):
    """Evaluate modes ``0..max_mode`` at the 1-D array ``x``.

    Returns an array of shape ``(len(x), max_mode + 1)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((x.shape[0], max_mode + 1))
    out[:, 0] = 1.0
    n_freq = max_mode // 2 + max_mode % 2
    if n_freq:
        angle = 2.0 * np.pi * np.outer(x, np.arange(1, n_freq + 1))
        cos = SQRT2 * np.cos(angle)
        sin = SQRT2 * np.sin(angle)
        out[:, 1::2] = cos[:, : (max_mode + 1) // 2]
        out[:, 2::2] = sin[:, : max_mode // 2]
    return out


def evaluate(X, modes):
    """Evaluate the basis functions with multi-indices ``modes`` (K, d) at
    points ``X`` (n, d).  Returns the (n, K) evaluation matrix."""
    X = np.asarray(X, dtype=float)
    modes = np.asarray(modes, dtype=np.int64)
    out = np.ones((X.shape[0], modes.shape[0]))
    for j in range(modes.shape[1]):
        col = modes[:, j]
        top = int(col.max()) if col.size else 0
        if top == 0:
            continue
        out *= trig_table(X[:, j], top)[:, col]
    return out


def total_order_indices(count, d):
    """First ``count`` multi-indices ordered by mode sum, then lexicographically."""
    out = []
    total = 0
    while len(out) < count:
        for combo in _compositions(total, d):
            out.append(combo)
            if len(out) == count:
                break
        total += 1
    return np.array(out, dtype=np.int64).reshape(count, d)


def _compositions(total, d):
    # Tuples of d nonnegative ints summing to ``total``, in lexicographic order.
    if d == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


def product_order(weight, d):
    """Lazily enumerate multi-indices in nonincreasing order of ``weight``.

    ``weight`` maps a mode tuple to its product weight and must be
    nonincreasing in every coordinate.  Ties are broken
    lexicographically, which falls out of the heap key.
    """
    start = (0,) * d
    heap = [(-weight(start), start)]
    seen = {start}
    while heap:
        neg_w, idx = heapq.heappop(heap)
        yield idx, -neg_w
        for j in range(d):
            nxt = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (-weight(nxt), nxt))


def brute_force_product_order(weight, d, box):
    """Sort every multi-index in ``{0..box-1}^d`` by (-weight, lex)."""
    pool = list(itertools.product(range(box), repeat=d))
    pool.sort(key=lambda idx: (-weight(idx), idx))
    return pool


def invert_squared_mode(v, mode):
    """Map uniforms ``v`` to draws from the density ``|mode(x)|^2`` on [0, 1].

    For frequency ``l`` the density ``1 +/- cos(4 pi l x)`` has ``2l``
    periods of equal mass, so ``v * 2l`` splits into a uniform period index
    and a uniform level ``u``.  Inside one period the CDF in the rescaled
    variable ``y`` is ``y +/- sin(2 pi y) / (2 pi)``, which is inverted by
    monotone bisection.
    """
    v = np.asarray(v, dtype=float)
    mode = np.broadcast_to(np.asarray(mode, dtype=np.int64), v.shape)
    out = v.copy()
    active = mode > 0
    if not np.any(active):
        return out
    freq = ((mode[active] + 1) // 2).astype(float)
    sign = np.where(mode[active] % 2 == 1, 1.0, -1.0)
    scaled = v[active] * 2.0 * freq
    period = np.minimum(np.floor(scaled), 2.0 * freq - 1.0)
    level = scaled - period
    lo = np.zeros_like(level)
    hi = np.ones_like(level)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = mid + sign * np.sin(2.0 * np.pi * mid) / (2.0 * np.pi) < level
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out[active] = (period + 0.5 * (lo + hi)) / (2.0 * freq)
    return out


def squared_mode_cdf(x, mode):
    """CDF of ``|mode|^2`` on [0, 1]; the closed form the sampler inverts."""
    x = np.asarray(x, dtype=float)
    if mode == 0:
        return x
    freq = (mode + 1) // 2
    sign = 1.0 if mode % 2 == 1 else -1.0
    return x + sign * np.sin(4.0 * np.pi * freq * x) / (4.0 * np.pi * freq)
