"""
张量算子 - 逐元素运算、矩阵乘法、归约与形状变换
"""
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import ShapeError
from .tensor import ArrayLike, Function, Tensor, as_tensor, get_default_dtype

Scalar = Union[int, float]
Axes = Optional[Union[int, Sequence[int]]]


# ==================== 张量创建 ====================

class RandomSpec:
    """随机填充规格：normal(loc, scale) 或 uniform(low, high)"""

    def __init__(self, kind: str = "normal", loc: float = 0.0, scale: float = 1.0,
                 low: float = 0.0, high: float = 1.0):
        if kind not in ("normal", "uniform"):
            raise ValueError(f"未知的随机分布: {kind}")
        self.kind = kind
        self.loc, self.scale = loc, scale
        self.low, self.high = low, high

    def draw(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
        if self.kind == "normal":
            return rng.normal(self.loc, self.scale, size=shape)
        return rng.uniform(self.low, self.high, size=shape)


def tensor_create(
    shape: Sequence[int],
    fill: Union[float, RandomSpec] = 0.0,
    rng: Optional[np.random.Generator] = None,
    requires_grad: bool = False,
    dtype=None,
) -> Tensor:
    """按形状创建张量；随机填充必须显式传入带种子的生成器"""
    shape = tuple(int(n) for n in shape)
    if any(n < 0 for n in shape):
        raise ShapeError(f"维度必须非负: {shape}")
    count = 1
    limit = np.iinfo(np.intp).max
    for n in shape:
        count *= n
        if count > limit:
            raise ShapeError(f"元素个数超出索引空间: {shape}")

    dtype = dtype or get_default_dtype()
    if isinstance(fill, RandomSpec):
        if rng is None:
            raise ValueError("随机填充需要显式的随机数生成器")
        data = fill.draw(rng, shape).astype(dtype)
    else:
        data = np.full(shape, float(fill), dtype=dtype)
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


# ==================== 逐元素运算 ====================

def _is_scalar_tensor(t: Tensor) -> bool:
    return t.ndim == 0


def _check_binary(a: Tensor, b: Tensor):
    if a.shape != b.shape and not (_is_scalar_tensor(a) or _is_scalar_tensor(b)):
        raise ShapeError(f"二元运算形状不一致: {a.shape} vs {b.shape}")


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """标量参与运算时把梯度求和回标量"""
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum(dtype=np.float64), dtype=grad.dtype).reshape(shape)


class Add(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return _reduce_to(grad, self.shapes[0]), _reduce_to(grad, self.shapes[1])


class Sub(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return _reduce_to(grad, self.shapes[0]), _reduce_to(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return _reduce_to(grad * self.b, self.a.shape), _reduce_to(grad * self.a, self.b.shape)


class AddConst(Function):
    def forward(self, a, value: float = 0.0):
        return a + a.dtype.type(value)

    def backward(self, grad):
        return (grad,)


class MulConst(Function):
    def forward(self, a, value: float = 1.0):
        self.value = a.dtype.type(value)
        return a * self.value

    def backward(self, grad):
        return (grad * self.value,)


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class ReLU(Function):
    def forward(self, a):
        self.mask = a > 0
        return np.where(self.mask, a, 0).astype(a.dtype)

    def backward(self, grad):
        return (grad * self.mask,)


class Sigmoid(Function):
    def forward(self, a):
        # 分段计算避免 exp 溢出；输出夹在开区间 (0, 1) 内
        out = np.empty_like(a)
        pos = a >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
        ex = np.exp(a[~pos])
        out[~pos] = ex / (1.0 + ex)
        lo, hi = np.finfo(out.dtype).tiny, np.nextafter(out.dtype.type(1), out.dtype.type(0))
        np.clip(out, lo, hi, out=out)
        self.out = out
        return out

    def backward(self, grad):
        return (grad * self.out * (1 - self.out),)


class Abs(Function):
    def forward(self, a):
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad):
        return (grad * self.sign,)


def add(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(b, Tensor):
        return AddConst.apply(a, value=float(b))
    _check_binary(a, b)
    return Add.apply(a, b)


def sub(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(b, Tensor):
        return AddConst.apply(a, value=-float(b))
    _check_binary(a, b)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Union[Tensor, Scalar]) -> Tensor:
    if not isinstance(b, Tensor):
        return MulConst.apply(a, value=float(b))
    _check_binary(a, b)
    return Mul.apply(a, b)


def neg(a: Tensor) -> Tensor:
    return Neg.apply(a)


def relu(a: Tensor) -> Tensor:
    return ReLU.apply(a)


def sigmoid(a: Tensor) -> Tensor:
    return Sigmoid.apply(a)


def absolute(a: Tensor) -> Tensor:
    return Abs.apply(a)


_UNARY = {"relu": relu, "sigmoid": sigmoid, "abs": absolute}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, a: Union[Tensor, ArrayLike], b: Optional[Union[Tensor, ArrayLike, Scalar]] = None) -> Tensor:
    """逐元素运算分发：add / sub / mul / relu / sigmoid / abs"""
    a = as_tensor(a)
    if op in _UNARY:
        if b is not None:
            raise ValueError(f"{op} 是一元运算")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise ValueError(f"{op} 需要两个操作数")
        if not isinstance(b, (int, float)):
            b = as_tensor(b)
        return _BINARY[op](a, b)
    raise ValueError(f"未知的逐元素运算: {op}")


# ==================== 矩阵乘法 ====================

class MatMul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """二维矩阵乘法 [m×k]·[k×n]"""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul 仅支持二维张量: {a.shape} · {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"内维不一致: {a.shape} · {b.shape}")
    return MatMul.apply(a, b)


# ==================== 归约 ====================

def _normalize_axes(axes: Axes, ndim: int) -> Tuple[int, ...]:
    if axes is None:
        return tuple(range(ndim))
    if isinstance(axes, int):
        axes = (axes,)
    normalized = []
    for axis in axes:
        if not -ndim <= axis < ndim:
            raise ShapeError(f"无效的轴 {axis}（张量阶数 {ndim}）")
        normalized.append(axis % ndim)
    if len(set(normalized)) != len(normalized):
        raise ShapeError(f"归约轴重复: {tuple(axes)}")
    return tuple(sorted(normalized))


class Sum(Function):
    def forward(self, a, axes: Tuple[int, ...] = (), keepdims: bool = False):
        self.shape, self.axes, self.keepdims = a.shape, axes, keepdims
        return np.sum(a, axis=axes, dtype=np.float64, keepdims=keepdims).astype(a.dtype)

    def _expand(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return np.broadcast_to(grad, self.shape).copy()

    def backward(self, grad):
        return (self._expand(grad),)


class Mean(Sum):
    def forward(self, a, axes: Tuple[int, ...] = (), keepdims: bool = False):
        self.shape, self.axes, self.keepdims = a.shape, axes, keepdims
        self.count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
        return np.mean(a, axis=axes, dtype=np.float64, keepdims=keepdims).astype(a.dtype)

    def backward(self, grad):
        return (self._expand(grad) / grad.dtype.type(self.count),)


def reduce(op: str, a: Tensor, axes: Axes = None, keepdims: bool = False) -> Tensor:
    """沿指定轴求和/求均值，累加器使用64位"""
    axes = _normalize_axes(axes, a.ndim)
    if op == "sum":
        return Sum.apply(a, axes=axes, keepdims=keepdims)
    if op == "mean":
        return Mean.apply(a, axes=axes, keepdims=keepdims)
    raise ValueError(f"未知的归约运算: {op}")


# ==================== 形状变换 ====================

class Reshape(Function):
    def forward(self, a, shape: Tuple[int, ...] = ()):
        self.shape = a.shape
        return a.reshape(shape).copy()

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Permute(Function):
    def forward(self, a, axes: Tuple[int, ...] = ()):
        self.inverse = tuple(np.argsort(axes))
        return np.ascontiguousarray(np.transpose(a, axes))

    def backward(self, grad):
        return (np.ascontiguousarray(np.transpose(grad, self.inverse)),)


class Concat(Function):
    def forward(self, *arrays, axis: int = 0):
        self.axis = axis
        self.bounds = np.cumsum([0] + [a.shape[axis] for a in arrays])
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        parts = []
        for lo, hi in zip(self.bounds[:-1], self.bounds[1:]):
            index = [slice(None)] * grad.ndim
            index[self.axis] = slice(int(lo), int(hi))
            parts.append(np.ascontiguousarray(grad[tuple(index)]))
        return tuple(parts)


class AddBias(Function):
    """沿通道轴广播偏置，供全连接层使用"""

    def forward(self, x, bias, axis: int = 1):
        self.axis = axis
        shape = [1] * x.ndim
        shape[axis] = bias.shape[0]
        return x + bias.reshape(shape)

    def backward(self, grad):
        axes = tuple(i for i in range(grad.ndim) if i != self.axis)
        return grad, np.sum(grad, axis=axes, dtype=np.float64).astype(grad.dtype)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(n) for n in shape)
    known = [n for n in shape if n != -1]
    if shape.count(-1) > 1 or (shape.count(-1) == 0 and int(np.prod(shape)) != a.size):
        raise ShapeError(f"无法把 {a.shape} 变形为 {shape}")
    if shape.count(-1) == 1 and (not known or a.size % int(np.prod(known)) != 0):
        raise ShapeError(f"无法把 {a.shape} 变形为 {shape}")
    return Reshape.apply(a, shape=shape)


def permute(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(int(i) for i in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"无效的轴排列 {axes}（张量阶数 {a.ndim}）")
    return Permute.apply(a, axes=axes)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat 至少需要一个张量")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise ShapeError(f"concat 形状不兼容: {[t.shape for t in tensors]}")
    return Concat.apply(*tensors, axis=axis)


def add_bias(x: Tensor, bias: Tensor, axis: int = 1) -> Tensor:
    if bias.ndim != 1 or x.shape[axis] != bias.shape[0]:
        raise ShapeError(f"偏置 {bias.shape} 与输入 {x.shape} 的第 {axis} 轴不匹配")
    return AddBias.apply(x, bias, axis=axis)
