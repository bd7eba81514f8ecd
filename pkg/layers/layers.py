"""
网络层 - 2D/3D卷积、全连接与全局平均池化
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from engine import Tensor, add_bias, avg_pool_spatial, conv_nd, get_default_dtype, matmul, permute, reduce, reshape
from models.errors import ShapeError

Padding3D = Union[int, Tuple[int, int, int]]


def he_normal(shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator) -> Tensor:
    """零均值高斯初始化，std = sqrt(2 / fan_in)"""
    data = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(get_default_dtype())
    return Tensor(data, requires_grad=True)


def zeros_param(shape: Tuple[int, ...]) -> Tensor:
    return Tensor(np.zeros(shape, dtype=get_default_dtype()), requires_grad=True)


# ==================== 层定义 ====================

@dataclass
class Conv2DLayer:
    """2D卷积层，权重 N_out × N_in × d × d"""
    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3]:
            raise ShapeError(f"2D卷积权重必须为 N_out×N_in×d×d，当前 {self.weight.shape}")
        if self.kernel % 2 == 0:
            raise ShapeError(f"卷积核尺寸必须为奇数，当前 {self.kernel}")
        if self.stride < 1 or self.padding < 0:
            raise ShapeError(f"无效的 stride={self.stride} / padding={self.padding}")

    @classmethod
    def create(cls, n_in: int, n_out: int, kernel: int, stride: int, padding: int,
               rng: np.random.Generator) -> "Conv2DLayer":
        shape = (n_out, n_in, kernel, kernel)
        return cls(he_normal(shape, n_in * kernel * kernel, rng), zeros_param((n_out,)), stride, padding)

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d_forward(x, self)


@dataclass
class Conv3DLayer:
    """3D卷积层，权重 N_out × N_in × t × d × d"""
    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: Padding3D = (1, 1, 1)

    def __post_init__(self):
        if self.weight.ndim != 5:
            raise ShapeError(f"3D卷积权重必须为 N_out×N_in×t×d×d，当前 {self.weight.shape}")
        if self.stride < 1:
            raise ShapeError(f"无效的 stride={self.stride}")

    @classmethod
    def create(cls, n_in: int, n_out: int, kernel: int, rng: np.random.Generator,
               stride: int = 1, padding: Padding3D = (1, 1, 1)) -> "Conv3DLayer":
        shape = (n_out, n_in, kernel, kernel, kernel)
        return cls(he_normal(shape, n_in * kernel ** 3, rng), zeros_param((n_out,)), stride, padding)

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return conv3d_forward(x, self)


@dataclass
class FCLayer:
    """全连接层，权重 out × in"""
    weight: Tensor
    bias: Tensor

    def __post_init__(self):
        if self.weight.ndim != 2 or min(self.weight.shape) < 1:
            raise ShapeError(f"全连接权重必须为 out×in 且均不小于1，当前 {self.weight.shape}")

    @classmethod
    def create(cls, n_in: int, n_out: int, rng: np.random.Generator) -> "FCLayer":
        return cls(he_normal((n_out, n_in), n_in, rng), zeros_param((n_out,)))

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return fc_forward(x, self)


# ==================== 前向函数 ====================

def conv2d_forward(x: Tensor, layer: Conv2DLayer) -> Tensor:
    """
    2D卷积前向

    支持 C×H×W、B×C×H×W，以及逐帧处理的 B×C×D×H×W（D 轴视作独立帧）。
    """
    if x.ndim == 3:
        out = conv2d_forward(reshape(x, (1,) + x.shape), layer)
        return reshape(out, out.shape[1:])
    if x.ndim == 4:
        return conv_nd(x, layer.weight, layer.bias, layer.stride, layer.padding)
    if x.ndim == 5:
        weight = reshape(layer.weight, (layer.n_out, layer.n_in, 1, layer.kernel, layer.kernel))
        return conv_nd(x, weight, layer.bias, (1, layer.stride, layer.stride), (0, layer.padding, layer.padding))
    raise ShapeError(f"2D卷积输入阶数必须为3、4或5，当前形状 {x.shape}")


def conv3d_forward(x: Tensor, layer: Conv3DLayer) -> Tensor:
    """3D卷积前向，支持 C×D×H×W 与 B×C×D×H×W"""
    if x.ndim == 4:
        out = conv3d_forward(reshape(x, (1,) + x.shape), layer)
        return reshape(out, out.shape[1:])
    if x.ndim == 5:
        return conv_nd(x, layer.weight, layer.bias, layer.stride, layer.padding)
    raise ShapeError(f"3D卷积输入阶数必须为4或5，当前形状 {x.shape}")


def fc_forward(x: Tensor, layer: FCLayer) -> Tensor:
    """全连接前向，x 为 in 或 B×in"""
    if x.ndim == 1:
        out = fc_forward(reshape(x, (1, x.shape[0])), layer)
        return reshape(out, (layer.n_out,))
    if x.ndim != 2 or x.shape[1] != layer.n_in:
        raise ShapeError(f"全连接输入 {x.shape} 与层输入维度 {layer.n_in} 不一致")
    return add_bias(matmul(x, permute(layer.weight, (1, 0))), layer.bias, axis=1)


def global_avg_pool(x: Tensor, axes: str = "spatial") -> Tensor:
    """
    全局平均池化

    spatial 模式：C×D×H×W -> C×D；spatiotemporal 模式：C×D×H×W -> C。
    带批量维（5阶）时各轴顺延一位。
    """
    if x.ndim not in (4, 5):
        raise ShapeError(f"全局平均池化需要4阶或5阶输入，当前形状 {x.shape}")
    offset = x.ndim - 4
    if axes == "spatial":
        return reduce("mean", x, (offset + 2, offset + 3))
    if axes == "spatiotemporal":
        return reduce("mean", x, (offset + 1, offset + 2, offset + 3))
    raise ValueError(f"未知的池化模式: {axes}")


def avg_pool(x: Tensor, k: int) -> Tensor:
    """空间 k×k 非重叠平均池化"""
    return avg_pool_spatial(x, k)


