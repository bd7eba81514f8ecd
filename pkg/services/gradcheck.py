"""
梯度检查服务 - 计算带梯度与64位中心差分的逐层对比

每一行对一个算子构造随机小张量（不超过512个元素），以 sum(out ⊙ R) 为标量目标，
R 为固定的随机投影。端到端一行在 D=4、16×16 的小网络上抽样检查权重梯度。
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np

from config.defaults import GRADCHECK_E2E_TOL, GRADCHECK_LAYER_TOL, GRADCHECK_STEP
from config.logging_config import get_logger
from engine import Tape, Tensor, backward, default_dtype, matmul, mul, reduce, relu, sigmoid
from layers import (
    Conv2DLayer, Conv3DLayer, FCLayer, LossHyperParams, avg_pool, global_avg_pool, quality_loss
)
from models.run_config import ModelVariant
from network import ModelConfig, build_model, forward

logger = get_logger(__name__)

# 相对误差分母下限，避免接近0的梯度放大舍入误差
REL_FLOOR = 1e-3


@dataclass
class GradcheckRow:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_error) and self.max_rel_error <= self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "max_rel_error": self.max_rel_error, "tolerance": self.tolerance,
                "passed": self.passed}


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))


def _param(rng: np.random.Generator, shape, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _away_from_zero(rng: np.random.Generator, shape, margin: float = 0.05) -> Tensor:
    """ReLU/abs 的输入避开不可导点"""
    values = rng.uniform(margin, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return Tensor(values, requires_grad=True)


def check_function(fn: Callable[..., Tensor], inputs: Sequence[Tensor], rng: np.random.Generator,
                   step: float = GRADCHECK_STEP) -> float:
    """逐元素比较 fn 对所有输入的计算带梯度与中心差分"""
    sample = fn(*inputs)
    projection = Tensor(rng.standard_normal(sample.shape))

    def objective() -> Tensor:
        out = fn(*inputs)
        return reduce("sum", mul(out, projection)) if out.ndim else out

    for t in inputs:
        t.grad = None
    with Tape() as tape:
        loss = objective()
    backward(loss, tape)

    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros(t.shape)
        numeric = np.zeros(t.size)
        base = t.data.copy()
        for i in range(t.size):
            shifted = base.copy()
            shifted.flat[i] += step
            t.data = shifted
            plus = objective().item()
            shifted.flat[i] -= 2 * step
            t.data = shifted
            minus = objective().item()
            numeric[i] = (plus - minus) / (2 * step)
        t.data = base
        worst = max(worst, relative_error(analytic.reshape(-1), numeric))
    return worst


class _Weights:
    def __init__(self, *weights: Tensor):
        self._weights = list(weights)

    def weights(self) -> List[Tensor]:
        return self._weights


def _layer_cases(rng: np.random.Generator) -> Dict[str, Callable[[], float]]:
    def conv2d():
        x, w, b = _param(rng, (2, 2, 6, 6)), _param(rng, (3, 2, 3, 3)), _param(rng, (3,))
        return check_function(lambda x, w, b: Conv2DLayer(w, b, stride=2, padding=1)(x), [x, w, b], rng)

    def conv3d():
        x, w, b = _param(rng, (1, 2, 4, 4, 4)), _param(rng, (2, 2, 3, 3, 3)), _param(rng, (2,))
        return check_function(lambda x, w, b: Conv3DLayer(w, b)(x), [x, w, b], rng)

    def fc():
        x, w, b = _param(rng, (3, 5)), _param(rng, (4, 5)), _param(rng, (4,))
        return check_function(lambda x, w, b: FCLayer(w, b)(x), [x, w, b], rng)

    def matmul_case():
        a, b = _param(rng, (4, 5)), _param(rng, (5, 3))
        return check_function(matmul, [a, b], rng)

    def gap():
        x = _param(rng, (2, 3, 4, 4))
        return check_function(lambda x: global_avg_pool(x, "spatial"), [x], rng)

    def avgpool():
        x = _param(rng, (1, 3, 8, 8))
        return check_function(lambda x: avg_pool(x, 4), [x], rng)

    def sigmoid_case():
        x = _param(rng, (4, 6), -4.0, 4.0)
        return check_function(sigmoid, [x], rng)

    def relu_case():
        x = _away_from_zero(rng, (4, 6))
        return check_function(relu, [x], rng)

    def loss():
        pred, w = _param(rng, (4,)), _param(rng, (3, 3))
        labels = rng.uniform(0.0, 1.0, size=4)
        hyper = LossHyperParams(1.0, 0.1)
        return check_function(lambda p, w: quality_loss(p, labels, _Weights(w), hyper), [pred, w], rng)

    return {
        "conv2d": conv2d,
        "conv3d": conv3d,
        "fc": fc,
        "matmul": matmul_case,
        "gap": gap,
        "avgpool": avgpool,
        "sigmoid": sigmoid_case,
        "relu": relu_case,
        "loss": loss,
    }


def check_end_to_end(rng: np.random.Generator, variant: ModelVariant = ModelVariant.C3D,
                     samples_per_param: int = 2, step: float = GRADCHECK_STEP) -> float:
    """∂score/∂(抽样权重) 与中心差分对比，取抽样向量的相对范数误差"""
    cfg = ModelConfig(frames=4, patch=16, branch_channels=4, trunk_channels=[8, 8, 4, 1],
                      fc_hidden=8, variant=variant)
    params = build_model(cfg, seed=int(rng.integers(0, 2 ** 31)))
    distorted = Tensor(rng.uniform(0.0, 1.0, size=(1, 4, 16, 16)))
    residual = Tensor(rng.uniform(-0.3, 0.3, size=(1, 4, 16, 16)))

    def score() -> Tensor:
        return forward(params, distorted, residual)[0]

    with Tape() as tape:
        loss = score()
    backward(loss, tape)

    analytic, numeric = [], []
    for _, p in params.named_parameters():
        base = p.data.copy()
        for i in rng.choice(p.size, size=min(samples_per_param, p.size), replace=False):
            shifted = base.copy()
            shifted.flat[i] += step
            p.data = shifted
            plus = score().item()
            shifted.flat[i] -= 2 * step
            p.data = shifted
            minus = score().item()
            p.data = base
            analytic.append(float(p.grad.flat[i]))
            numeric.append((plus - minus) / (2 * step))
    a, n = np.asarray(analytic), np.asarray(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-12))


def run_gradcheck(seed: int = 0, layer_tol: float = GRADCHECK_LAYER_TOL,
                  e2e_tol: float = GRADCHECK_E2E_TOL) -> List[GradcheckRow]:
    """在64位精度下运行全部检查，返回逐行结果"""
    rng = np.random.default_rng(seed)
    rows: List[GradcheckRow] = []
    with default_dtype(np.float64):
        for name, case in _layer_cases(rng).items():
            rows.append(GradcheckRow(name, case(), layer_tol))
        rows.append(GradcheckRow("end_to_end", check_end_to_end(rng), e2e_tol))
        rows.append(GradcheckRow("end_to_end_2d", check_end_to_end(rng, ModelVariant.ABLATION_2D), e2e_tol))

    for row in rows:
        marker = "✅" if row.passed else "❌"
        logger.info(f"{marker} {row.name:<14} 最大相对误差 {row.max_rel_error:.3e} (阈值 {row.tolerance:.0e})")
    return rows
