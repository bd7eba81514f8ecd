"""
目标函数 - 数据项（批均方误差）加权重L2正则
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from config.defaults import DEFAULT_LAMBDA1, DEFAULT_LAMBDA2
from engine import Tensor, reduce
from models.errors import ShapeError


@dataclass(frozen=True)
class LossHyperParams:
    """目标函数超参数 λ1（数据项）与 λ2（正则项）"""
    lambda1: float = DEFAULT_LAMBDA1
    lambda2: float = DEFAULT_LAMBDA2

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} 必须是非负有限数，当前 {value}")


def weight_decay_term(weights: Iterable[Tensor]) -> Tensor:
    """所有权重（不含偏置）的平方和"""
    total = None
    for weight in weights:
        term = reduce("sum", weight * weight)
        total = term if total is None else total + term
    if total is None:
        return Tensor(0.0)
    return total


def quality_loss(
    pred: Tensor,
    labels: Union[Sequence[float], np.ndarray, Tensor],
    params,
    hyper: LossHyperParams = LossHyperParams(),
) -> Tensor:
    """
    质量回归损失

    λ1 · mean_n (f(x_n) - y_n)^2 + λ2 · Σ‖W‖²，params 需提供 weights()。
    """
    if not isinstance(labels, Tensor):
        labels = Tensor(np.asarray(labels, dtype=pred.dtype).reshape(-1), dtype=pred.dtype)
    if pred.ndim == 0:
        pred = pred.reshape(1)
    if pred.ndim != 1 or labels.ndim != 1 or pred.shape != labels.shape:
        raise ShapeError(f"预测 {pred.shape} 与标签 {labels.shape} 数量不一致")
    if pred.shape[0] < 1:
        raise ShapeError("批量为空")

    diff = pred - labels
    loss = reduce("mean", diff * diff) * hyper.lambda1
    if hyper.lambda2 > 0:
        loss = loss + weight_decay_term(params.weights()) * hyper.lambda2
    return loss
