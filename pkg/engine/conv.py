"""
卷积与池化算子 - 基于补丁矩阵（im2col）展开的N维卷积

2D与3D卷积共用同一个内核：输入 (B, C, *S)，权重 (O, C, *K)。
前向按样本、按首个输出空间轴分块构造补丁矩阵，再与权重矩阵相乘；
反向按相同的固定顺序重算补丁矩阵，保证结果可复现。
"""
import itertools
from typing import Sequence, Tuple, Union

import numpy as np

from models.errors import ShapeError
from .tensor import Function, Tensor

IntOrTuple = Union[int, Sequence[int]]

# 单个补丁块允许的最大元素数，控制峰值内存
MAX_PATCH_ELEMENTS = 16 * 1024 * 1024


def _as_tuple(value: IntOrTuple, n: int, name: str) -> Tuple[int, ...]:
    if isinstance(value, int):
        return (value,) * n
    value = tuple(int(v) for v in value)
    if len(value) != n:
        raise ShapeError(f"{name} 需要 {n} 个分量，实际为 {value}")
    return value


def conv_output_shape(spatial: Sequence[int], kernel: Sequence[int],
                      stride: Sequence[int], padding: Sequence[int]) -> Tuple[int, ...]:
    """输出空间尺寸 floor((n + 2p - k) / s) + 1"""
    return tuple((n + 2 * p - k) // s + 1 for n, k, s, p in zip(spatial, kernel, stride, padding))


def _chunks(out_shape: Tuple[int, ...], rows: int) -> Sequence[Tuple[int, int]]:
    """沿首个输出空间轴切块"""
    rest = int(np.prod(out_shape[1:])) if len(out_shape) > 1 else 1
    step = max(1, MAX_PATCH_ELEMENTS // max(1, rows * rest))
    return [(lo, min(lo + step, out_shape[0])) for lo in range(0, out_shape[0], step)]


def _offset_slices(offsets, stride, out_shape, lo, hi):
    """某个卷积核偏移在补零输入上对应的跨步切片"""
    slices = []
    for axis, (k, s, n) in enumerate(zip(offsets, stride, out_shape)):
        start = k + s * lo if axis == 0 else k
        count = (hi - lo) if axis == 0 else n
        slices.append(slice(start, start + s * (count - 1) + 1, s))
    return tuple(slices)


def _patch_matrix(xp: np.ndarray, kernel, stride, out_shape, lo: int, hi: int) -> np.ndarray:
    """单个样本的补丁矩阵 (C·∏K, L_chunk)"""
    channels = xp.shape[0]
    chunk_shape = (hi - lo,) + tuple(out_shape[1:])
    cols = np.empty((channels,) + tuple(kernel) + chunk_shape, dtype=xp.dtype)
    for offsets in itertools.product(*(range(k) for k in kernel)):
        cols[(slice(None),) + offsets] = xp[(slice(None),) + _offset_slices(offsets, stride, out_shape, lo, hi)]
    return cols.reshape(channels * int(np.prod(kernel)), -1)


def _scatter_patches(dxp: np.ndarray, dcols: np.ndarray, kernel, stride, out_shape, lo: int, hi: int):
    """补丁矩阵梯度累加回补零输入（col2im）"""
    channels = dxp.shape[0]
    chunk_shape = (hi - lo,) + tuple(out_shape[1:])
    dcols = dcols.reshape((channels,) + tuple(kernel) + chunk_shape)
    for offsets in itertools.product(*(range(k) for k in kernel)):
        dxp[(slice(None),) + _offset_slices(offsets, stride, out_shape, lo, hi)] += dcols[(slice(None),) + offsets]


class ConvND(Function):
    """N维卷积，输入 (B, C, *S)，权重 (O, C, *K)，偏置 (O,)"""

    def forward(self, x, weight, bias, stride=(), padding=()):
        self.kernel = weight.shape[2:]
        self.stride, self.padding = stride, padding
        self.x_shape = x.shape
        self.out_shape = conv_output_shape(x.shape[2:], self.kernel, stride, padding)
        self.xp = np.pad(x, [(0, 0), (0, 0)] + [(p, p) for p in padding])
        self.weight = weight
        self.wm = weight.reshape(weight.shape[0], -1)

        batch, out_channels = x.shape[0], weight.shape[0]
        out = np.empty((batch, out_channels) + self.out_shape, dtype=x.dtype)
        rows = self.wm.shape[1]
        for b in range(batch):
            for lo, hi in _chunks(self.out_shape, rows):
                cols = _patch_matrix(self.xp[b], self.kernel, stride, self.out_shape, lo, hi)
                block = self.wm @ cols + bias[:, None]
                out[b, :, lo:hi] = block.reshape((out_channels, hi - lo) + self.out_shape[1:])
        return out

    def backward(self, grad):
        batch, out_channels = grad.shape[0], grad.shape[1]
        rows = self.wm.shape[1]
        dwm = np.zeros(self.wm.shape, dtype=np.float64)
        dxp = np.zeros_like(self.xp)
        for b in range(batch):
            for lo, hi in _chunks(self.out_shape, rows):
                gm = grad[b, :, lo:hi].reshape(out_channels, -1)
                cols = _patch_matrix(self.xp[b], self.kernel, self.stride, self.out_shape, lo, hi)
                dwm += gm @ cols.T
                _scatter_patches(dxp[b], self.wm.T @ gm, self.kernel, self.stride, self.out_shape, lo, hi)

        crop = (slice(None), slice(None)) + tuple(slice(p, p + n) for p, n in zip(self.padding, self.x_shape[2:]))
        dx = np.ascontiguousarray(dxp[crop])
        dw = dwm.astype(grad.dtype).reshape(self.weight.shape)
        db = np.sum(grad, axis=tuple(i for i in range(grad.ndim) if i != 1), dtype=np.float64).astype(grad.dtype)
        return dx, dw, db


def conv_nd(x: Tensor, weight: Tensor, bias: Tensor, stride: IntOrTuple = 1, padding: IntOrTuple = 0) -> Tensor:
    """带形状检查的N维卷积入口"""
    n = weight.ndim - 2
    if x.ndim != n + 2:
        raise ShapeError(f"输入阶数 {x.ndim} 与 {n}D 卷积核不匹配")
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(f"输入通道 {x.shape[1]} 与卷积核输入通道 {weight.shape[1]} 不一致")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"偏置形状 {bias.shape} 与输出通道 {weight.shape[0]} 不一致")
    stride = _as_tuple(stride, n, "stride")
    padding = _as_tuple(padding, n, "padding")
    if any(s < 1 for s in stride) or any(p < 0 for p in padding):
        raise ShapeError(f"无效的 stride={stride} / padding={padding}")
    out_shape = conv_output_shape(x.shape[2:], weight.shape[2:], stride, padding)
    if any(o < 1 for o in out_shape):
        raise ShapeError(f"输出尺寸小于1: 输入 {x.shape[2:]}，卷积核 {weight.shape[2:]}")
    return ConvND.apply(x, weight, bias, stride=stride, padding=padding)


# ==================== 平均池化 ====================

class SpatialAvgPool(Function):
    """最后两个轴上的非重叠 k×k 平均池化"""

    def forward(self, x, k: int = 1):
        self.k = k
        h, w = x.shape[-2:]
        blocks = x.reshape(x.shape[:-2] + (h // k, k, w // k, k))
        return blocks.mean(axis=(-3, -1), dtype=np.float64).astype(x.dtype)

    def backward(self, grad):
        k = self.k
        up = np.repeat(np.repeat(grad, k, axis=-2), k, axis=-1)
        return (up / grad.dtype.type(k * k),)


def avg_pool_spatial(x: Tensor, k: int) -> Tensor:
    if x.ndim < 2:
        raise ShapeError(f"池化需要至少二阶张量，当前形状 {x.shape}")
    h, w = x.shape[-2:]
    if k < 1 or h % k or w % k:
        raise ShapeError(f"空间尺寸 {h}×{w} 不能被池化窗口 {k} 整除")
    return SpatialAvgPool.apply(x, k=k)
