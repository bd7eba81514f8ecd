"""
数据划分工具 - 按参考视频内容划分训练/测试集，以及主观分数归一化
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from config.defaults import DEFAULT_SPLIT_FRACTION
from config.logging_config import get_logger
from models.errors import SplitError
from models.manifest import DatasetManifest, DistortedEntry, ScorePolarity

logger = get_logger(__name__)


@dataclass(frozen=True)
class SplitPlan:
    """一次内容隔离的划分：同一参考视频的所有失真视频落在同一侧"""
    seed: int
    train_ids: List[str]
    test_ids: List[str]

    def train_entries(self, manifest: DatasetManifest) -> List[DistortedEntry]:
        return manifest.distorted_of(self.train_ids)

    def test_entries(self, manifest: DatasetManifest) -> List[DistortedEntry]:
        return manifest.distorted_of(self.test_ids)


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def make_split(manifest: DatasetManifest, fraction: float = DEFAULT_SPLIT_FRACTION, seed: int = 0) -> SplitPlan:
    """
    随机选取 round(fraction·N) 个参考视频用于训练，其余用于测试

    Raises:
        SplitError: 参考视频少于2个、比例非法或任一侧为空
    """
    ref_ids = [r.id for r in manifest.references]
    n = len(ref_ids)
    if n < 2:
        raise SplitError(f"至少需要2个参考视频才能划分，当前 {n}")
    if not 0.0 < fraction < 1.0:
        raise SplitError(f"训练比例必须在 (0, 1) 内，当前 {fraction}")
    n_train = round_half_up(fraction * n)
    if n_train < 1 or n_train >= n:
        raise SplitError(f"{n} 个参考视频按比例 {fraction} 划分后有一侧为空")

    order = np.random.default_rng(seed).permutation(n)
    chosen = set(int(i) for i in order[:n_train])
    train_ids = [ref_ids[i] for i in range(n) if i in chosen]
    test_ids = [ref_ids[i] for i in range(n) if i not in chosen]
    if not manifest.distorted_of(test_ids):
        raise SplitError(f"种子 {seed} 的测试集不含失真视频")
    return SplitPlan(seed=seed, train_ids=train_ids, test_ids=test_ids)


@dataclass(frozen=True)
class LabelScaler:
    """
    主观分数的 min-max 归一化，方向统一为 1 = 最好

    low/high 取自训练集；跨度为0时归一化结果固定为0.5。
    """
    low: float
    high: float
    polarity: ScorePolarity

    @classmethod
    def fit(cls, scores: Sequence[float], polarity: ScorePolarity) -> "LabelScaler":
        if len(scores) == 0:
            raise SplitError("无法用空的分数列表拟合归一化")
        return cls(float(np.min(scores)), float(np.max(scores)), ScorePolarity(polarity))

    @property
    def span(self) -> float:
        return self.high - self.low

    def normalize(self, score: float) -> float:
        if self.span == 0:
            return 0.5
        unit = (score - self.low) / self.span
        return 1.0 - unit if self.polarity == ScorePolarity.LOWER_IS_BETTER else unit

    def denormalize(self, value: float) -> float:
        """归一化值映射回原始分数方向与量纲"""
        if self.polarity == ScorePolarity.LOWER_IS_BETTER:
            value = 1.0 - value
        return self.low + value * self.span

    def to_dict(self) -> Dict[str, object]:
        return {"low": self.low, "high": self.high, "polarity": self.polarity.value}

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "LabelScaler":
        return cls(float(data["low"]), float(data["high"]), ScorePolarity(data["polarity"]))
