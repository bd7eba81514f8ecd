"""
优化器 - Adam 与基于平台期的学习率衰减
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from config.defaults import (
    ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
    PLATEAU_FACTOR, PLATEAU_PATIENCE, PLATEAU_REL_TOL
)
from config.logging_config import get_logger
from engine import Tensor
from models.errors import DivergenceError, OptimizerError

logger = get_logger(__name__)

NamedParams = Sequence[Tuple[str, Tensor]]


def _named(params) -> NamedParams:
    if hasattr(params, "named_parameters"):
        return params.named_parameters()
    return list(params)


# ==================== Adam ====================

@dataclass
class AdamState:
    """Adam 状态：一阶/二阶矩、步数与当前学习率"""
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Union[NamedParams, object], state: AdamState) -> AdamState:
    """
    执行一次带偏差校正的 Adam 更新，更新后清空梯度

    Raises:
        OptimizerError: 任一参数缺少梯度
    """
    named = _named(params)
    missing = [name for name, p in named if p.grad is None]
    if missing:
        raise OptimizerError(f"以下参数缺少梯度: {', '.join(missing)}")

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name, param in named:
        grad = param.grad.astype(np.float64)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or m.shape != grad.shape:
            m = np.zeros_like(grad)
            v = np.zeros_like(grad)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name], state.v[name] = m, v

        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        param.data = (param.data.astype(np.float64) - update).astype(param.dtype)
        param.grad = None

    return state


# ==================== 平台期学习率衰减 ====================

@dataclass
class PlateauScheduler:
    """
    损失连续 patience 个epoch没有严格改善时，学习率乘以 factor

    epoch 从0开始计数：第0个epoch确立最优值，常数损失序列在第5、10个epoch衰减。
    """
    lr: float
    factor: float = PLATEAU_FACTOR
    patience: int = PLATEAU_PATIENCE
    rel_tol: float = PLATEAU_REL_TOL
    best: float = math.inf
    counter: int = 0
    decays: List[int] = field(default_factory=list)
    epoch: int = -1

    def is_improvement(self, loss: float) -> bool:
        if math.isinf(self.best):
            return True
        return loss < self.best - self.rel_tol * abs(self.best)


def plateau_update(sched: PlateauScheduler, epoch_loss: float) -> float:
    """
    输入一个epoch的损失，返回（可能衰减后的）学习率

    Raises:
        DivergenceError: 损失为非有限值
    """
    if not math.isfinite(epoch_loss):
        raise DivergenceError(f"训练损失发散: {epoch_loss}")

    sched.epoch += 1
    if sched.is_improvement(epoch_loss):
        sched.best = epoch_loss
        sched.counter = 0
        return sched.lr

    sched.counter += 1
    if sched.counter >= sched.patience:
        sched.lr *= sched.factor
        sched.counter = 0
        sched.decays.append(sched.epoch)
        logger.info(f"📉 第 {sched.epoch} 个epoch损失停滞，学习率衰减为 {sched.lr:.3e}")
    return sched.lr
