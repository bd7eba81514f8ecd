"""
评估指标工具 - SROCC、逻辑斯蒂映射后的PLCC、PSNR基线与多次划分的中位数汇总
"""
import math
import warnings
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import optimize, stats

from config.defaults import LOGISTIC_MAX_ITER, LOGISTIC_REL_STEP, PIXEL_MAX
from config.logging_config import get_logger
from models.errors import MetricError, ShapeError
from models.report import EvalReport, LogisticParams, RunMetrics
from tools.video_tools import RawVideo

logger = get_logger(__name__)


class ScorePairs(BaseModel):
    """预测分数与主观分数的成对列表"""
    predicted: List[float] = Field(..., min_length=3)
    subjective: List[float] = Field(..., min_length=3)

    @model_validator(mode="after")
    def _check(self):
        if len(self.predicted) != len(self.subjective):
            raise ValueError(f"预测 {len(self.predicted)} 与主观 {len(self.subjective)} 数量不一致")
        if not all(math.isfinite(v) for v in self.predicted + self.subjective):
            raise ValueError("分数中存在非有限值")
        return self

    @classmethod
    def of(cls, predicted: Sequence[float], subjective: Sequence[float]) -> "ScorePairs":
        try:
            return cls(predicted=[float(v) for v in predicted], subjective=[float(v) for v in subjective])
        except ValueError as e:
            raise MetricError(f"分数对无效: {e}") from e

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.predicted, dtype=np.float64), np.asarray(self.subjective, dtype=np.float64)


def _as_pairs(pairs) -> ScorePairs:
    if isinstance(pairs, ScorePairs):
        return pairs
    predicted, subjective = pairs
    return ScorePairs.of(predicted, subjective)


# ==================== 相关系数 ====================

def srocc(pairs) -> float:
    """
    Spearman 秩相关，并列取平均秩

    Raises:
        MetricError: 任一列表为常数（秩方差为0）
    """
    x, y = _as_pairs(pairs).arrays()
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise MetricError("常数分数列表的秩相关无定义")
    return float(stats.spearmanr(x, y)[0])


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise MetricError("常数分数列表的线性相关无定义")
    return float(stats.pearsonr(x, y)[0])


# ==================== 逻辑斯蒂映射 ====================

def logistic4(x: np.ndarray, beta: Sequence[float]) -> np.ndarray:
    b1, b2, b3, b4 = beta
    z = np.clip(-(x - b3) / abs(b4), -500.0, 500.0)
    return (b1 - b2) / (1.0 + np.exp(z)) + b2


def _logistic_jacobian(beta: np.ndarray, x: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4 = beta
    scale = abs(b4)
    u = np.clip((x - b3) / scale, -500.0, 500.0)
    s = 1.0 / (1.0 + np.exp(-u))
    ds = (b1 - b2) * s * (1.0 - s)
    return np.column_stack([
        s,
        1.0 - s,
        -ds / scale,
        -ds * u * np.sign(b4) / scale,
    ])


def initial_logistic(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """初值 β1=max(y), β2=min(y), β3=median(x), β4=std(x)；负相关时交换 β1/β2"""
    beta = np.array([np.max(y), np.min(y), np.median(x), np.std(x)], dtype=np.float64)
    if stats.spearmanr(x, y)[0] < 0:
        beta[0], beta[1] = beta[1], beta[0]
    return beta


def fit_logistic(x: np.ndarray, y: np.ndarray, max_iter: int = LOGISTIC_MAX_ITER) -> LogisticParams:
    """
    阻尼高斯-牛顿（Levenberg-Marquardt）最小二乘拟合四参数逻辑斯蒂

    求解器未报告收敛（含达到评估次数上限）时退化为仿射拟合并标记 fallback。
    """
    beta0 = initial_logistic(x, y)
    if beta0[3] == 0:
        raise MetricError("预测分数为常数，无法拟合映射")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            result = optimize.least_squares(
                lambda b: logistic4(x, b) - y,
                beta0,
                jac=lambda b: _logistic_jacobian(b, x),
                method="lm",
                x_scale="jac",
                xtol=LOGISTIC_REL_STEP,
                ftol=LOGISTIC_REL_STEP,
                max_nfev=max_iter,
            )
            beta, ok = result.x, bool(result.success) and np.isfinite(result.cost)
        except (ValueError, np.linalg.LinAlgError) as e:
            logger.warning(f"⚠️ 逻辑斯蒂拟合异常: {e}")
            beta, ok = beta0, False

    if ok and np.all(np.isfinite(beta)) and beta[3] != 0 and np.ptp(logistic4(x, beta)) > 0:
        return LogisticParams(beta1=beta[0], beta2=beta[1], beta3=beta[2], beta4=beta[3])

    slope, intercept = np.polyfit(x, y, 1)
    logger.warning("⚠️ 逻辑斯蒂拟合未收敛，改用仿射映射")
    return LogisticParams(beta1=beta0[0], beta2=beta0[1], beta3=beta0[2], beta4=beta0[3],
                          fallback=True, slope=float(slope), intercept=float(intercept))


def plcc_after_logistic(pairs) -> Tuple[float, LogisticParams]:
    """
    逻辑斯蒂映射后的 Pearson 线性相关

    Raises:
        MetricError: 样本少于5个或分数为常数
    """
    x, y = _as_pairs(pairs).arrays()
    if len(x) < 5:
        raise MetricError(f"逻辑斯蒂拟合至少需要5个样本，当前 {len(x)}")
    params = fit_logistic(x, y)
    return pearson(params.apply(x), y), params


# ==================== PSNR 基线 ====================

def mse_frames(ref: RawVideo, dist: RawVideo) -> np.ndarray:
    """逐帧均方误差（64位）"""
    if ref.shape != dist.shape:
        raise ShapeError(f"参考视频 {ref.shape} 与失真视频 {dist.shape} 尺寸不一致")
    diff = ref.luma.astype(np.float64) - dist.luma.astype(np.float64)
    return np.mean(diff * diff, axis=(1, 2))


def psnr_video(ref: RawVideo, dist: RawVideo) -> float:
    """视频 PSNR = 10·log10(255² / 帧平均MSE)，完全相同时返回 +inf"""
    mse = float(np.mean(mse_frames(ref, dist)))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PIXEL_MAX * PIXEL_MAX / mse)


# ==================== 汇总 ====================

def median(values: Sequence[float]) -> float:
    """中位数，偶数个时取中间两数平均"""
    if len(values) == 0:
        raise MetricError("无法对空列表求中位数")
    return float(np.median(np.asarray(values, dtype=np.float64)))


def evaluate_scores(predicted: Sequence[float], subjective: Sequence[float]) -> Tuple[float, float, LogisticParams]:
    """返回 (PLCC, SROCC, 逻辑斯蒂参数)"""
    pairs = ScorePairs.of(predicted, subjective)
    plcc, params = plcc_after_logistic(pairs)
    return plcc, srocc(pairs), params


def aggregate_runs(runs: Sequence[RunMetrics], scorer: str = "c3dvqa") -> EvalReport:
    """多次划分的结果汇总为报告，PLCC/SROCC 取中位数"""
    runs = list(runs)
    report = EvalReport(
        scorer=scorer,
        runs=runs,
        median_plcc=median([r.plcc for r in runs]),
        median_srocc=median([r.srocc for r in runs]),
    )
    logger.info(f"📊 {len(runs)} 次划分汇总: PLCC中位数={report.median_plcc:.4f}, "
                f"SROCC中位数={report.median_srocc:.4f}")
    return report
