"""Convolution, pooling, activation, and dense layers in plain numpy.

Forward passes operate on batched ``(batch, h, w, channels)`` float arrays
(single images may be passed as ``(h, w, channels)`` and come back without
the batch axis).  Valid padding everywhere: a convolution with kernel side
k at stride s maps spatial side n to ``(n - k) // s + 1``.

Each forward has a matching backward that consumes the upstream gradient
and returns gradients for inputs and parameters.  Backwards are written
for the configurations the small trainable network uses (stride 1
convolutions, non-overlapping pooling) and assert those preconditions.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "KERNEL_SIDES",
    "conv_forward",
    "conv_backward",
    "relu",
    "relu_backward",
    "max_pool",
    "max_pool_backward",
    "global_avg_pool",
    "global_avg_pool_backward",
    "dense_forward",
    "dense_backward",
    "softmax",
    "cross_entropy",
    "softmax_cross_entropy_backward",
]

# Receptive-field sides this harness supports for its own convolutions.
KERNEL_SIDES = (3, 5)


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[np.newaxis], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected (h, w, c) or (batch, h, w, c) input, got shape {x.shape}")


def _windows(x: np.ndarray, side: int, stride: int) -> np.ndarray:
    """View of all valid ``side x side`` patches: (batch, oh, ow, c, side, side)."""
    view = sliding_window_view(x, (side, side), axis=(1, 2))
    return view[:, ::stride, ::stride]


def conv_forward(
    x: np.ndarray,
    kernels: np.ndarray,
    bias: np.ndarray | None = None,
    stride: int = 1,
) -> np.ndarray:
    """Valid cross-correlation.

    ``kernels`` has shape ``(k, k, c_in, c_out)`` with k in KERNEL_SIDES;
    ``bias`` is ``(c_out,)`` or omitted.
    """
    batch, squeeze = _as_batch(x)
    if kernels.ndim != 4 or kernels.shape[0] != kernels.shape[1]:
        raise ValueError(f"kernels must be (k, k, c_in, c_out), got {kernels.shape}")
    side = kernels.shape[0]
    if side not in KERNEL_SIDES:
        raise ValueError(f"kernel side must be one of {KERNEL_SIDES}, got {side}")
    if kernels.shape[2] != batch.shape[3]:
        raise ValueError(
            f"kernel input channels {kernels.shape[2]} != image channels {batch.shape[3]}"
        )
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if batch.shape[1] < side or batch.shape[2] < side:
        raise ValueError(
            f"input spatial side {batch.shape[1:3]} smaller than kernel side {side}"
        )
    patches = _windows(batch, side, stride)
    out = np.einsum("bijckl,klcm->bijm", patches, kernels, optimize=True)
    if bias is not None:
        if bias.shape != (kernels.shape[3],):
            raise ValueError(f"bias must be ({kernels.shape[3]},), got {bias.shape}")
        out = out + bias
    return out[0] if squeeze else out


def conv_backward(
    grad_out: np.ndarray, x: np.ndarray, kernels: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of a stride-1 valid convolution: (d_x, d_kernels, d_bias)."""
    batch, squeeze = _as_batch(x)
    grad_batch = grad_out[np.newaxis] if squeeze else grad_out
    side = kernels.shape[0]
    patches = _windows(batch, side, 1)
    d_kernels = np.einsum("bijckl,bijm->klcm", patches, grad_batch, optimize=True)
    d_bias = grad_batch.sum(axis=(0, 1, 2))
    # d_x is a full correlation of the upstream gradient with the kernels
    # flipped spatially and transposed across the channel axes.
    pad = side - 1
    padded = np.pad(grad_batch, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    flipped = kernels[::-1, ::-1].transpose(0, 1, 3, 2)
    grad_patches = _windows(padded, side, 1)
    d_x = np.einsum("bijmkl,klmc->bijc", grad_patches, flipped, optimize=True)
    if squeeze:
        return d_x[0], d_kernels, d_bias
    return d_x, d_kernels, d_bias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def _pool_windows(x: np.ndarray, window: int) -> np.ndarray:
    """Non-overlapping windows flattened: (batch, oh, ow, window*window, c)."""
    batch_size, h, w, channels = x.shape
    oh, ow = h // window, w // window
    trimmed = x[:, : oh * window, : ow * window]
    tiles = trimmed.reshape(batch_size, oh, window, ow, window, channels)
    return tiles.transpose(0, 1, 3, 2, 4, 5).reshape(batch_size, oh, ow, window * window, channels)


def max_pool(x: np.ndarray, window: int, stride: int | None = None) -> np.ndarray:
    """Max pooling with valid windows; stride defaults to the window side."""
    batch, squeeze = _as_batch(x)
    stride = window if stride is None else stride
    if window < 1 or stride < 1:
        raise ValueError(f"window and stride must be >= 1, got {window}, {stride}")
    if window > batch.shape[1] or window > batch.shape[2]:
        raise ValueError(
            f"pooling window {window} exceeds spatial side {batch.shape[1:3]}"
        )
    if stride == window:
        out = _pool_windows(batch, window).max(axis=3)
    else:
        out = _windows(batch, window, stride).max(axis=(4, 5))
    return out[0] if squeeze else out


def max_pool_backward(
    grad_out: np.ndarray, x: np.ndarray, window: int, stride: int | None = None
) -> np.ndarray:
    """Routes each window's gradient to the first maximum in scan order."""
    stride = window if stride is None else stride
    if stride != window:
        raise ValueError("pooling backward supports non-overlapping windows only")
    batch, squeeze = _as_batch(x)
    grad_batch = grad_out[np.newaxis] if squeeze else grad_out
    batch_size, h, w, channels = batch.shape
    oh, ow = h // window, w // window
    windows = _pool_windows(batch, window)
    winners = windows.argmax(axis=3)
    scattered = np.zeros_like(windows)
    np.put_along_axis(
        scattered, winners[:, :, :, np.newaxis, :], grad_batch[:, :, :, np.newaxis, :], axis=3
    )
    tiles = scattered.reshape(batch_size, oh, ow, window, window, channels)
    d_trimmed = tiles.transpose(0, 1, 3, 2, 4, 5).reshape(
        batch_size, oh * window, ow * window, channels
    )
    d_x = np.zeros_like(batch)
    d_x[:, : oh * window, : ow * window] = d_trimmed
    return d_x[0] if squeeze else d_x


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Mean over the spatial axes: (batch, h, w, c) -> (batch, c)."""
    batch, squeeze = _as_batch(x)
    out = batch.mean(axis=(1, 2))
    return out[0] if squeeze else out


def global_avg_pool_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    batch, squeeze = _as_batch(x)
    grad_batch = grad_out[np.newaxis] if squeeze else grad_out
    _, h, w, _ = batch.shape
    d_x = np.broadcast_to(
        grad_batch[:, np.newaxis, np.newaxis, :] / (h * w), batch.shape
    ).copy()
    return d_x[0] if squeeze else d_x


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weights + bias


def dense_backward(
    grad_out: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d_x = grad_out @ weights.T
    d_weights = x.T @ grad_out
    d_bias = grad_out.sum(axis=0)
    return d_x, d_weights, d_bias


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax; rows sum to one for any finite input."""
    shifted = x - x.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=axis, keepdims=True)


def cross_entropy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of integer ``labels`` under ``probabilities``."""
    if probabilities.ndim != 2:
        raise ValueError(f"expected (batch, classes) probabilities, got {probabilities.shape}")
    picked = probabilities[np.arange(len(labels)), labels]
    return float(-np.log(np.clip(picked, 1e-300, None)).mean())


def softmax_cross_entropy_backward(
    probabilities: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Gradient of mean cross-entropy w.r.t. the pre-softmax logits."""
    grad = probabilities.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / len(labels)
