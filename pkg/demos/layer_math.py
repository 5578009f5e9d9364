"""Check the numpy layer kernels against a slow, obviously-correct oracle.

The convolution, pooling, and softmax routines in cxrbench.models.layers are
vectorized for speed.  This script re-derives a few outputs with plain nested
loops and exact summation, then confirms a backward pass against central
finite differences.  Everything is deterministic; it prints the worst
absolute deviation for each check.
"""

import numpy as np

from cxrbench.models.layers import (
    conv_backward,
    conv_forward,
    max_pool,
    softmax,
)

rng = np.random.default_rng(7)

# --- convolution vs nested loops -------------------------------------------
x = rng.normal(size=(2, 9, 9, 3))
kernels = rng.normal(size=(3, 3, 3, 4))
bias = rng.normal(size=4)
fast = conv_forward(x, kernels, bias, stride=2)

out_side = (9 - 3) // 2 + 1
slow = np.zeros((2, out_side, out_side, 4))
for b in range(2):
    for i in range(out_side):
        for j in range(out_side):
            for k in range(4):
                patch = x[b, 2 * i : 2 * i + 3, 2 * j : 2 * j + 3, :]
                slow[b, i, j, k] = np.sum(patch * kernels[:, :, :, k]) + bias[k]

print(f"conv_forward vs nested loops:  max |diff| = {np.abs(fast - slow).max():.3e}")

# --- max pooling vs nested loops --------------------------------------------
pooled = max_pool(x, window=3, stride=3)
slow_pool = np.zeros((2, 3, 3, 3))
for b in range(2):
    for i in range(3):
        for j in range(3):
            window = x[b, 3 * i : 3 * i + 3, 3 * j : 3 * j + 3, :]
            slow_pool[b, i, j, :] = window.max(axis=(0, 1))

print(f"max_pool vs nested loops:      max |diff| = {np.abs(pooled - slow_pool).max():.3e}")

# --- softmax sanity ----------------------------------------------------------
logits = rng.normal(size=(5, 4)) * 30
probs = softmax(logits)
print(f"softmax row sums:              max |sum - 1| = {np.abs(probs.sum(axis=1) - 1).max():.3e}")
shifted = softmax(logits + 1000.0)
print(f"softmax shift invariance:      max |diff| = {np.abs(probs - shifted).max():.3e}")

# --- conv backward vs finite differences ------------------------------------
# project the output onto a fixed random direction so the loss is scalar
x = rng.normal(size=(1, 6, 6, 2))
kernels = rng.normal(size=(3, 3, 2, 2))
bias = rng.normal(size=2)
direction = rng.normal(size=conv_forward(x, kernels, bias).shape)


def loss(x_, k_, b_):
    return float(np.sum(conv_forward(x_, k_, b_) * direction))


dx, dk, db = conv_backward(direction, x, kernels)

eps = 1e-6
worst = 0.0
flat = kernels.ravel()
analytic = dk.ravel()
for idx in range(0, flat.size, 7):
    saved = flat[idx]
    flat[idx] = saved + eps
    hi = loss(x, kernels, bias)
    flat[idx] = saved - eps
    lo = loss(x, kernels, bias)
    flat[idx] = saved
    worst = max(worst, abs((hi - lo) / (2 * eps) - analytic[idx]))

print(f"conv_backward grad check:      worst |analytic - numeric| = {worst:.3e}")
print("all checks printed above should be ~1e-6 or smaller")
