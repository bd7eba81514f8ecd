"""
张量与自动微分核心 - Tensor、Tape、Function 与反向传播
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.errors import AutogradError, ShapeError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_state = threading.local()


# ==================== 精度与计算带上下文 ====================

def get_default_dtype() -> np.dtype:
    """当前线程的默认存储精度（默认32位）"""
    return getattr(_state, "dtype", np.dtype(np.float32))


@contextmanager
def default_dtype(dtype) -> Iterator[None]:
    """临时切换默认存储精度，梯度检查使用64位"""
    previous = get_default_dtype()
    _state.dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _state.dtype = previous


def _tape_stack() -> List["Tape"]:
    stack = getattr(_state, "tapes", None)
    if stack is None:
        stack = []
        _state.tapes = stack
    return stack


def current_tape() -> Optional["Tape"]:
    """当前线程上处于活动状态的计算带"""
    stack = _tape_stack()
    return stack[-1] if stack else None


# ==================== Tensor ====================

class Tensor:
    """稠密N维实数张量，可选地追踪梯度"""

    __array_priority__ = 100  # 让 ndarray 与 Tensor 混合运算时走 Tensor 的反射运算符

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype=None):
        self._data = np.asarray(data, dtype=dtype or get_default_dtype(), order="C")
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._tape: Optional["Tape"] = None

    # ---------- 基本属性 ----------

    @property
    def data(self) -> np.ndarray:
        return self._data

    @data.setter
    def data(self, value: np.ndarray):
        value = np.asarray(value, dtype=self._data.dtype)
        if value.shape != self._data.shape:
            raise ShapeError(f"形状不可变: {self._data.shape} -> {value.shape}")
        self._data = np.asarray(value, order="C")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    def item(self) -> float:
        if self._data.size != 1:
            raise ShapeError(f"只有单元素张量可以转换为标量，当前形状 {self.shape}")
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self._data.copy(), requires_grad=False, dtype=self.dtype)

    def zero_grad(self):
        self.grad = None

    def backward(self) -> None:
        """在产生该张量的计算带上执行反向传播"""
        backward(self, self._tape)

    # ---------- 运算符 ----------

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(self, other)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.add(ops.neg(self), other)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __truediv__(self, other):
        from . import ops
        if isinstance(other, Tensor):
            raise ShapeError("仅支持张量除以标量")
        return ops.mul(self, 1.0 / float(other))

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    # ---------- 常用方法 ----------

    def relu(self) -> "Tensor":
        from . import ops
        return ops.relu(self)

    def sigmoid(self) -> "Tensor":
        from . import ops
        return ops.sigmoid(self)

    def abs(self) -> "Tensor":
        from . import ops
        return ops.absolute(self)

    def sum(self, axes=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.reduce("sum", self, axes, keepdims=keepdims)

    def mean(self, axes=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.reduce("mean", self, axes, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes) -> "Tensor":
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.permute(self, axes)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


def as_tensor(value: Union["Tensor", ArrayLike], dtype=None) -> Tensor:
    """把数组或标量包装为不需要梯度的张量"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


# ==================== 计算带 ====================

@dataclass
class TapeEntry:
    """计算带上记录的一次运算"""
    function: "Function"
    inputs: Tuple[Tensor, ...]
    output: Tensor


class Tape:
    """
    动态计算带，每次前向重新构建

    按执行顺序记录运算，天然满足拓扑序；只在创建它的线程内使用。
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self._outputs: Dict[int, Tensor] = {}
        self._consumed = False

    def record(self, function: "Function", inputs: Tuple[Tensor, ...], output: Tensor):
        self.entries.append(TapeEntry(function, inputs, output))
        self._outputs[id(output)] = output
        output._tape = self

    def contains(self, tensor: Tensor) -> bool:
        return self._outputs.get(id(tensor)) is tensor

    def __len__(self) -> int:
        return len(self.entries)

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False


# ==================== Function ====================

class Function:
    """可微算子基类，子类实现 forward / backward"""

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        """执行前向，并在存在活动计算带时记录该运算"""
        function = cls()
        out_data = function.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = any(t.requires_grad for t in inputs)
        out = Tensor(out_data, requires_grad=requires_grad, dtype=out_data.dtype)

        tape = current_tape()
        if requires_grad and tape is not None:
            tape.record(function, tuple(inputs), out)
        return out


# ==================== 反向传播 ====================

def backward(loss: Tensor, tape: Optional[Tape]) -> List[Tensor]:
    """
    反向遍历计算带，把 ∂loss/∂param 累加到叶子张量的 grad 上

    Returns:
        获得梯度的叶子张量列表（按首次出现的顺序）
    """
    if loss.ndim != 0:
        raise AutogradError(f"损失必须是0阶张量，当前形状 {loss.shape}")
    if tape is None or not tape.contains(loss):
        raise AutogradError("损失不在给定的计算带上")
    if tape._consumed:
        raise AutogradError("该计算带已经执行过反向传播")
    tape._consumed = True

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[int, Tensor] = {}

    for entry in reversed(tape.entries):
        grad_out = grads.pop(id(entry.output), None)
        if grad_out is None:
            continue
        input_grads = entry.function.backward(grad_out)
        for tensor, grad in zip(entry.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise AutogradError(
                    f"{type(entry.function).__name__} 反向梯度形状 {grad.shape} 与输入 {tensor.shape} 不一致"
                )
            key = id(tensor)
            grads[key] = grads[key] + grad if key in grads else grad
            if not tape.contains(tensor):
                leaves.setdefault(key, tensor)

    for key, tensor in leaves.items():
        grad = grads[key].astype(tensor.dtype, copy=False)
        tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad

    return list(leaves.values())
