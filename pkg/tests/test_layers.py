"""
网络层测试：卷积朴素循环对照、形状、池化与损失
"""
import numpy as np
import pytest

from engine import Tensor, concat, default_dtype
from layers import (
    Conv2DLayer, Conv3DLayer, FCLayer, LossHyperParams, avg_pool, conv2d_forward, conv3d_forward,
    fc_forward, global_avg_pool, quality_loss, weight_decay_term
)
from models.errors import ShapeError
from network import ModelConfig, build_model, run_branch, run_network, run_trunk


def naive_conv2d(x, w, b, stride, pad):
    c_in, h, wd = x.shape
    c_out, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    oh, ow = (h + 2 * pad - k) // stride + 1, (wd + 2 * pad - k) // stride + 1
    out = np.zeros((c_out, oh, ow))
    for o in range(c_out):
        for i in range(oh):
            for j in range(ow):
                acc = b[o]
                for c in range(c_in):
                    for u in range(k):
                        for v in range(k):
                            acc += w[o, c, u, v] * xp[c, i * stride + u, j * stride + v]
                out[o, i, j] = acc
    return out


def naive_conv3d(x, w, b, stride, pad):
    c_in, d, h, wd = x.shape
    c_out, _, kt, k, _ = w.shape
    pt, ph, pw = pad
    xp = np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    od = (d + 2 * pt - kt) // stride + 1
    oh = (h + 2 * ph - k) // stride + 1
    ow = (wd + 2 * pw - k) // stride + 1
    out = np.zeros((c_out, od, oh, ow))
    for o in range(c_out):
        for t in range(od):
            for i in range(oh):
                for j in range(ow):
                    patch = xp[:, t * stride:t * stride + kt, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[o, t, i, j] = b[o] + np.sum(patch * w[o])
    return out


class TestConv2D:

    def test_branch_downsampling(self, rng):
        layer = Conv2DLayer.create(1, 16, 3, 2, 1, rng)
        out = conv2d_forward(Tensor(rng.standard_normal((1, 112, 112))), layer)
        assert out.shape == (16, 56, 56)

    def test_identity_kernel(self, rng):
        layer = Conv2DLayer(Tensor(np.ones((1, 1, 1, 1))), Tensor(np.zeros(1)))
        x = rng.standard_normal((1, 7, 5))
        np.testing.assert_allclose(conv2d_forward(Tensor(x), layer).data, x, atol=1e-6)

    def test_matches_naive_oracle(self, rng):
        with default_dtype(np.float64):
            for _ in range(50):
                c_in, c_out = rng.integers(1, 4), rng.integers(1, 4)
                k = int(rng.choice([1, 3, 5]))
                stride, pad = int(rng.integers(1, 3)), int(rng.integers(0, 3))
                h, w = rng.integers(k, 10), rng.integers(k, 10)
                x = rng.standard_normal((c_in, h, w))
                wt = rng.standard_normal((c_out, c_in, k, k))
                b = rng.standard_normal(c_out)
                out = conv2d_forward(Tensor(x), Conv2DLayer(Tensor(wt), Tensor(b), stride, pad))
                np.testing.assert_allclose(out.data, naive_conv2d(x, wt, b, stride, pad), atol=1e-5)

    def test_framewise_on_five_d_input(self, rng):
        layer = Conv2DLayer.create(2, 3, 3, 2, 1, rng)
        x = rng.standard_normal((2, 2, 4, 8, 8)).astype(np.float32)
        out = conv2d_forward(Tensor(x), layer).data
        assert out.shape == (2, 3, 4, 4, 4)
        for t in range(4):
            frame = conv2d_forward(Tensor(x[:, :, t]), layer).data
            np.testing.assert_allclose(out[:, :, t], frame, atol=1e-5)

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeError):
            Conv2DLayer(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.zeros(1)))

    def test_channel_mismatch(self, rng):
        layer = Conv2DLayer.create(2, 3, 3, 1, 1, rng)
        with pytest.raises(ShapeError):
            conv2d_forward(Tensor(np.ones((1, 5, 5))), layer)


class TestConv3D:

    def test_centered_delta_is_identity(self, rng):
        w = np.zeros((1, 1, 3, 3, 3))
        w[0, 0, 1, 1, 1] = 1.0
        x = rng.standard_normal((1, 4, 5, 5))
        out = conv3d_forward(Tensor(x), Conv3DLayer(Tensor(w), Tensor(np.zeros(1))))
        np.testing.assert_allclose(out.data, x, atol=1e-6)

    def test_matches_naive_oracle(self, rng):
        with default_dtype(np.float64):
            for _ in range(50):
                c_in, c_out = rng.integers(1, 4), rng.integers(1, 4)
                k = int(rng.choice([1, 3]))
                stride = int(rng.integers(1, 3))
                pad = tuple(int(p) for p in rng.integers(0, 2, size=3))
                d, h, w = (int(n) for n in rng.integers(k, 7, size=3))
                x = rng.standard_normal((c_in, d, h, w))
                wt = rng.standard_normal((c_out, c_in, k, k, k))
                b = rng.standard_normal(c_out)
                out = conv3d_forward(Tensor(x), Conv3DLayer(Tensor(wt), Tensor(b), stride, pad))
                np.testing.assert_allclose(out.data, naive_conv3d(x, wt, b, stride, pad), atol=1e-5)

    def test_temporal_extent_preserved(self, rng):
        layer = Conv3DLayer.create(2, 2, 3, rng)
        for depth in range(1, 121):
            out = conv3d_forward(Tensor(rng.standard_normal((2, depth, 4, 4))), layer)
            assert out.shape == (2, depth, 4, 4), depth

    def test_trunk_chain_shape(self, rng):
        cfg = ModelConfig(frames=6, patch=28 * 4)
        params = build_model(cfg, seed=0)
        out = run_trunk(params.trunk, Tensor(rng.standard_normal((1, 32, 6, 28, 28))))
        assert out.shape == (1, 1, 6, 28, 28)
        assert np.all((out.data > 0) & (out.data < 1))


class TestShapeLaw:

    @pytest.mark.parametrize("frames", [15, 30, 60, 120])
    @pytest.mark.parametrize("size", [16, 32, 112])
    def test_branch_concat_trunk(self, frames, size):
        cfg = ModelConfig(frames=frames, patch=size, trunk_channels=[4, 1])
        params = build_model(cfg, seed=0)
        x = Tensor(np.random.default_rng(0).uniform(0, 1, (1, 1, frames, size, size)))
        branch = run_branch(params.dist_branch, x)
        assert branch.shape == (1, 16, frames, size // 4, size // 4)
        joined = concat([branch, run_branch(params.res_branch, x)], axis=1)
        assert joined.shape == (1, 32, frames, size // 4, size // 4)
        assert run_trunk(params.trunk, joined).shape == (1, 1, frames, size // 4, size // 4)

    @pytest.mark.parametrize("size", range(8, 113, 8))
    def test_threshold_is_quarter_resolution(self, size):
        cfg = ModelConfig(frames=2, patch=size, branch_channels=2, trunk_channels=[2, 1], fc_hidden=2)
        params = build_model(cfg, seed=0)
        x = Tensor(np.random.default_rng(size).uniform(0, 1, (1, 1, 2, size, size)))
        out = run_network(params, x, x * 0.1)
        assert out.threshold.shape == (1, 1, 2, size // 4, size // 4)
        assert out.masked.shape == out.threshold.shape


class TestFullyConnected:

    def test_single_and_batch(self, rng):
        layer = FCLayer.create(5, 3, rng)
        x = rng.standard_normal((4, 5)).astype(np.float32)
        batch = fc_forward(Tensor(x), layer).data
        expected = x @ layer.weight.data.T + layer.bias.data
        np.testing.assert_allclose(batch, expected, atol=1e-5)
        np.testing.assert_allclose(fc_forward(Tensor(x[0]), layer).data, expected[0], atol=1e-5)

    def test_input_mismatch(self, rng):
        with pytest.raises(ShapeError):
            fc_forward(Tensor(np.ones((2, 4))), FCLayer.create(5, 3, rng))


class TestPooling:

    def test_constant_input(self):
        out = global_avg_pool(Tensor(np.full((2, 3, 4, 4), 1.5)), "spatial")
        np.testing.assert_allclose(out.data, np.full((2, 3), 1.5))

    def test_hand_case(self):
        x = Tensor(np.arange(1.0, 9.0).reshape(1, 2, 2, 2))
        np.testing.assert_allclose(global_avg_pool(x, "spatial").data, [[2.5, 6.5]])
        np.testing.assert_allclose(global_avg_pool(x, "spatiotemporal").data, [4.5])

    def test_matches_mean(self, rng):
        x = rng.standard_normal((2, 3, 5, 6)).astype(np.float32)
        np.testing.assert_allclose(global_avg_pool(Tensor(x), "spatial").data, x.mean(axis=(2, 3)), atol=1e-6)

    def test_batched_offset(self, rng):
        x = rng.standard_normal((2, 1, 3, 4, 4)).astype(np.float32)
        assert global_avg_pool(Tensor(x), "spatial").shape == (2, 1, 3)

    def test_avg_pool_blocks(self):
        x = Tensor(np.arange(16.0).reshape(1, 4, 4))
        np.testing.assert_allclose(avg_pool(x, 2).data, [[[2.5, 4.5], [10.5, 12.5]]])

    def test_avg_pool_indivisible(self):
        with pytest.raises(ShapeError):
            avg_pool(Tensor(np.ones((1, 6, 6))), 4)


class _Weights:
    def __init__(self, weights):
        self._weights = weights

    def weights(self):
        return self._weights


class TestQualityLoss:

    def test_perfect_fit(self):
        loss = quality_loss(Tensor([0.3, 0.7]), [0.3, 0.7], _Weights([]), LossHyperParams(1.0, 0.0))
        assert loss.item() == pytest.approx(0.0)

    def test_hand_case(self):
        loss = quality_loss(Tensor([0.5]), [1.0], _Weights([]), LossHyperParams(1.0, 0.0))
        assert loss.item() == pytest.approx(0.25)

    def test_weight_decay_oracle(self, rng):
        params = build_model(ModelConfig(frames=4, patch=16, branch_channels=2, trunk_channels=[3, 1],
                                         fc_hidden=4), seed=1)
        expected = sum(float(np.sum(w.data.astype(np.float64) ** 2)) for w in params.weights())
        loss = quality_loss(Tensor([0.2]), [0.9], params, LossHyperParams(0.0, 1.0))
        assert loss.item() == pytest.approx(expected, rel=1e-5)
        assert weight_decay_term(params.weights()).item() == pytest.approx(expected, rel=1e-5)

    def test_batch_mismatch(self):
        with pytest.raises(ShapeError):
            quality_loss(Tensor([0.1, 0.2]), [0.1], _Weights([]))

    @pytest.mark.parametrize("lambda1, lambda2", [(-1.0, 0.0), (1.0, float("nan"))])
    def test_invalid_hyper_params(self, lambda1, lambda2):
        with pytest.raises(ValueError):
            LossHyperParams(lambda1, lambda2)
