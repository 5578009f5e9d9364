"""Layer math against independent oracles.

Forward passes are compared with nested-loop reimplementations (no numpy
vectorization, no shared code paths) to 1e-12.  Softmax is checked against
an arbitrary-precision oracle.  Every backward pass is checked against
central finite differences.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cxrbench.models import layers

rng = np.random.default_rng(20251204)


# -- nested-loop oracles -------------------------------------------------------

def conv_oracle(x, kernels, bias, stride):
    h, w, c_in = x.shape
    k = kernels.shape[0]
    c_out = kernels.shape[3]
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.zeros((oh, ow, c_out))
    for i in range(oh):
        for j in range(ow):
            for m in range(c_out):
                acc = 0.0
                for di in range(k):
                    for dj in range(k):
                        for c in range(c_in):
                            acc += (
                                x[i * stride + di, j * stride + dj, c]
                                * kernels[di, dj, c, m]
                            )
                out[i, j, m] = acc + (bias[m] if bias is not None else 0.0)
    return out


def max_pool_oracle(x, window, stride):
    h, w, c = x.shape
    oh = (h - window) // stride + 1
    ow = (w - window) // stride + 1
    out = np.zeros((oh, ow, c))
    for i in range(oh):
        for j in range(ow):
            for ch in range(c):
                best = -math.inf
                for di in range(window):
                    for dj in range(window):
                        best = max(best, x[i * stride + di, j * stride + dj, ch])
                out[i, j, ch] = best
    return out


def gap_oracle(x):
    h, w, c = x.shape
    out = np.zeros(c)
    for ch in range(c):
        acc = 0.0
        for i in range(h):
            for j in range(w):
                acc += x[i, j, ch]
        out[ch] = acc / (h * w)
    return out


def softmax_oracle(row):
    with mpmath.workdps(60):
        exps = [mpmath.exp(mpmath.mpf(float(v))) for v in row]
        total = mpmath.fsum(exps)
        return np.array([float(e / total) for e in exps])


def numeric_grad(fn, array, eps=1e-6):
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        hi = fn()
        flat[i] = original - eps
        lo = fn()
        flat[i] = original
        grad_flat[i] = (hi - lo) / (2 * eps)
    return grad


class TestConvForward:
    @pytest.mark.parametrize("side", [3, 5])
    @pytest.mark.parametrize("stride", [1, 2])
    def test_matches_nested_loop_oracle(self, side, stride):
        x = rng.normal(size=(9, 8, 3))
        kernels = rng.normal(size=(side, side, 3, 4))
        bias = rng.normal(size=4)
        got = layers.conv_forward(x, kernels, bias, stride=stride)
        want = conv_oracle(x, kernels, bias, stride)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_output_spatial_size_formula(self):
        x = np.zeros((11, 11, 1))
        kernels = np.zeros((3, 3, 1, 2))
        assert layers.conv_forward(x, kernels).shape == (9, 9, 2)
        assert layers.conv_forward(x, kernels, stride=2).shape == (5, 5, 2)

    def test_single_channel_identity_kernel(self):
        # a 3x3 kernel with only the center set copies the interior
        x = rng.normal(size=(6, 6, 1))
        kernels = np.zeros((3, 3, 1, 1))
        kernels[1, 1, 0, 0] = 1.0
        out = layers.conv_forward(x, kernels)
        np.testing.assert_allclose(out[:, :, 0], x[1:-1, 1:-1, 0], atol=1e-15)

    def test_batched_equals_stacked_singles(self):
        x = rng.normal(size=(4, 7, 7, 2))
        kernels = rng.normal(size=(3, 3, 2, 5))
        bias = rng.normal(size=5)
        batched = layers.conv_forward(x, kernels, bias)
        singles = np.stack([layers.conv_forward(x[i], kernels, bias) for i in range(4)])
        np.testing.assert_allclose(batched, singles, atol=1e-12)

    def test_kernel_side_must_be_three_or_five(self):
        x = np.zeros((8, 8, 1))
        with pytest.raises(ValueError, match="kernel side"):
            layers.conv_forward(x, np.zeros((4, 4, 1, 1)))

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError, match="channels"):
            layers.conv_forward(np.zeros((8, 8, 2)), np.zeros((3, 3, 1, 1)))

    def test_input_smaller_than_kernel_rejected(self):
        with pytest.raises(ValueError, match="smaller"):
            layers.conv_forward(np.zeros((2, 2, 1)), np.zeros((3, 3, 1, 1)))


class TestPooling:
    @pytest.mark.parametrize(("window", "stride"), [(2, 2), (3, 3), (2, 1), (3, 2)])
    def test_max_pool_matches_oracle(self, window, stride):
        x = rng.normal(size=(7, 9, 3))
        got = layers.max_pool(x, window, stride)
        want = max_pool_oracle(x, window, stride)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_window_larger_than_input_rejected(self):
        with pytest.raises(ValueError, match="window"):
            layers.max_pool(np.zeros((3, 3, 1)), window=4)

    def test_global_avg_pool_matches_oracle(self):
        x = rng.normal(size=(6, 5, 4))
        np.testing.assert_allclose(layers.global_avg_pool(x), gap_oracle(x), atol=1e-12)

    def test_global_avg_pool_batched(self):
        x = rng.normal(size=(3, 6, 5, 4))
        got = layers.global_avg_pool(x)
        assert got.shape == (3, 4)
        np.testing.assert_allclose(got[1], gap_oracle(x[1]), atol=1e-12)


class TestActivations:
    @given(
        hnp.arrays(
            np.float64,
            hnp.array_shapes(max_dims=3, max_side=6),
            elements=st.floats(-1e6, 1e6),
        )
    )
    def test_relu_clamps_at_zero(self, x):
        out = layers.relu(x)
        assert np.all(out >= 0)
        np.testing.assert_array_equal(out[x > 0], x[x > 0])
        assert np.all(out[x <= 0] == 0)

    def test_softmax_matches_high_precision_oracle(self):
        logits = rng.normal(scale=5, size=(20, 7))
        got = layers.softmax(logits, axis=1)
        for row_in, row_out in zip(logits, got):
            np.testing.assert_allclose(row_out, softmax_oracle(row_in), atol=1e-12)

    @given(
        hnp.arrays(
            np.float64, (4, 6), elements=st.floats(-700, 700, allow_nan=False)
        )
    )
    @settings(max_examples=200)
    def test_softmax_rows_sum_to_one(self, logits):
        out = layers.softmax(logits, axis=1)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(out >= 0)

    @given(
        hnp.arrays(np.float64, (3, 5), elements=st.floats(-50, 50)),
        st.floats(-100, 100),
    )
    @settings(max_examples=200)
    def test_softmax_shift_invariance(self, logits, shift):
        base = layers.softmax(logits, axis=1)
        shifted = layers.softmax(logits + shift, axis=1)
        np.testing.assert_allclose(base, shifted, atol=1e-9)

    def test_softmax_survives_large_logits(self):
        out = layers.softmax(np.array([[1000.0, 1000.0, -1000.0]]))
        np.testing.assert_allclose(out, [[0.5, 0.5, 0.0]], atol=1e-12)

    def test_cross_entropy_is_mean_negative_log_prob(self):
        probs = np.array([[0.25, 0.75], [0.5, 0.5]])
        labels = np.array([1, 0])
        want = -(math.log(0.75) + math.log(0.5)) / 2
        assert layers.cross_entropy(probs, labels) == pytest.approx(want, abs=1e-12)


class TestBackwardPasses:
    def relative_error(self, analytic, numeric):
        scale = max(1e-8, float(np.abs(analytic).max()), float(np.abs(numeric).max()))
        return float(np.abs(analytic - numeric).max()) / scale

    def test_conv_backward_gradients(self):
        x = rng.normal(size=(2, 6, 6, 2))
        kernels = rng.normal(size=(3, 3, 2, 3))
        bias = rng.normal(size=3)
        weights = rng.normal(size=(2, 4, 4, 3))  # random projection to a scalar

        def loss():
            return float((layers.conv_forward(x, kernels, bias) * weights).sum())

        d_out = weights
        d_x, d_kernels, d_bias = layers.conv_backward(d_out, x, kernels)
        assert self.relative_error(d_x, numeric_grad(loss, x)) < 1e-7
        assert self.relative_error(d_kernels, numeric_grad(loss, kernels)) < 1e-7
        assert self.relative_error(d_bias, numeric_grad(loss, bias)) < 1e-7

    def test_max_pool_backward_routes_to_first_maximum(self):
        x = np.array(
            [[[1.0], [5.0], [2.0], [0.0]],
             [[3.0], [5.0], [1.0], [4.0]]]
        )  # (2, 4, 1); window 2 -> two windows, left one has a tie on 5.0
        d_out = np.array([[[10.0], [20.0]]])
        d_x = layers.max_pool_backward(d_out, x, window=2)
        # scan order within a window is row-major: (0,1) sees 5.0 first
        assert d_x[0, 1, 0] == 10.0
        assert d_x[1, 1, 0] == 0.0
        assert d_x[1, 3, 0] == 20.0
        assert d_x.sum() == 30.0

    def test_max_pool_backward_matches_finite_differences(self):
        x = rng.permutation(np.arange(2 * 6 * 6 * 2, dtype=float)).reshape(2, 6, 6, 2)
        weights = rng.normal(size=(2, 3, 3, 2))

        def loss():
            return float((layers.max_pool(x, 2) * weights).sum())

        d_x = layers.max_pool_backward(weights, x, window=2)
        assert self.relative_error(d_x, numeric_grad(loss, x, eps=1e-3)) < 1e-9

    def test_max_pool_backward_rejects_overlapping_windows(self):
        with pytest.raises(ValueError, match="non-overlapping"):
            layers.max_pool_backward(np.zeros((1, 1, 1)), np.zeros((3, 3, 1)), 2, stride=1)

    def test_global_avg_pool_backward(self):
        x = rng.normal(size=(2, 4, 5, 3))
        weights = rng.normal(size=(2, 3))

        def loss():
            return float((layers.global_avg_pool(x) * weights).sum())

        d_x = layers.global_avg_pool_backward(weights, x)
        assert self.relative_error(d_x, numeric_grad(loss, x)) < 1e-9

    def test_dense_backward(self):
        x = rng.normal(size=(4, 6))
        w = rng.normal(size=(6, 2))
        b = rng.normal(size=2)
        weights = rng.normal(size=(4, 2))

        def loss():
            return float((layers.dense_forward(x, w, b) * weights).sum())

        d_x, d_w, d_b = layers.dense_backward(weights, x, w)
        assert self.relative_error(d_x, numeric_grad(loss, x)) < 1e-8
        assert self.relative_error(d_w, numeric_grad(loss, w)) < 1e-8
        assert self.relative_error(d_b, numeric_grad(loss, b)) < 1e-8

    def test_softmax_cross_entropy_backward(self):
        logits = rng.normal(size=(5, 2))
        labels = np.array([0, 1, 1, 0, 1])

        def loss():
            probs = layers.softmax(logits, axis=1)
            return layers.cross_entropy(probs, labels)

        probs = layers.softmax(logits, axis=1)
        d_logits = layers.softmax_cross_entropy_backward(probs, labels)
        assert self.relative_error(d_logits, numeric_grad(loss, logits)) < 1e-8

    def test_relu_backward_masks_nonpositive(self):
        x = np.array([-2.0, -0.0, 0.5, 3.0])
        d = np.ones_like(x)
        np.testing.assert_array_equal(layers.relu_backward(d, x), [0, 0, 1, 1])
