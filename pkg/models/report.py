"""
评估报告、训练日志与帧数扫描结果的 Pydantic 模型定义

CSV 列名固定：
    评估报告  run,seed,n_test,plcc,srocc,beta1,beta2,beta3,beta4,fit_fallback
    训练日志  epoch,loss,lr,seconds
    帧数扫描  D,PLCC,SROCC,epoch_seconds
"""
import json
import math
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

REPORT_COLUMNS = ["run", "seed", "n_test", "plcc", "srocc", "beta1", "beta2", "beta3", "beta4", "fit_fallback"]
TRAIN_LOG_COLUMNS = ["epoch", "loss", "lr", "seconds"]
SWEEP_COLUMNS = ["D", "PLCC", "SROCC", "epoch_seconds"]

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


class LogisticParams(BaseModel):
    """
    四参数单调逻辑斯蒂映射 f(x) = (β1-β2) / (1 + exp(-(x-β3)/|β4|)) + β2

    拟合失败时 fallback=True，映射退化为仿射 slope·x + intercept。
    """
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    fallback: bool = False
    slope: Optional[float] = None
    intercept: Optional[float] = None

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.fallback:
            return self.slope * x + self.intercept
        z = np.clip(-(x - self.beta3) / abs(self.beta4), -500.0, 500.0)
        return (self.beta1 - self.beta2) / (1.0 + np.exp(z)) + self.beta2


class RunMetrics(BaseModel):
    """单次划分的评估结果"""
    run: int
    seed: int
    n_test: int
    plcc: float
    srocc: float
    logistic: LogisticParams
    test_references: List[str] = Field(default_factory=list)

    def row(self) -> dict:
        return {
            "run": self.run, "seed": self.seed, "n_test": self.n_test,
            "plcc": self.plcc, "srocc": self.srocc,
            "beta1": self.logistic.beta1, "beta2": self.logistic.beta2,
            "beta3": self.logistic.beta3, "beta4": self.logistic.beta4,
            "fit_fallback": self.logistic.fallback,
        }


class EvalReport(BaseModel):
    """多次划分的评估报告，中位数与逐次结果一致"""
    scorer: str = "c3dvqa"
    runs: List[RunMetrics]
    median_plcc: float
    median_srocc: float

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.runs]

    def to_frame(self) -> pd.DataFrame:
        """每次划分一行，最后追加一行中位数"""
        frame = pd.DataFrame([r.row() for r in self.runs], columns=REPORT_COLUMNS)
        median = {c: None for c in REPORT_COLUMNS}
        median.update({"run": "median", "n_test": None, "plcc": self.median_plcc, "srocc": self.median_srocc})
        return pd.concat([frame.astype(object), pd.DataFrame([median], columns=REPORT_COLUMNS)], ignore_index=True)

    def write_csv(self, path: PathLike) -> Path:
        path = _prepare(path)
        self.to_frame().to_csv(path, index=False)
        return path

    def write_json(self, path: PathLike) -> Path:
        path = _prepare(path)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    lr: float
    seconds: float


class TrainLog(BaseModel):
    """训练日志：逐epoch损失、学习率、耗时与最优epoch"""
    epochs: List[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    best_loss: Optional[float] = None

    def record(self, epoch: int, loss: float, lr: float, seconds: float) -> bool:
        """记录一个epoch，返回该epoch是否为新的最小训练损失"""
        self.epochs.append(EpochRecord(epoch=epoch, loss=loss, lr=lr, seconds=seconds))
        if self.best_loss is None or loss < self.best_loss:
            self.best_epoch, self.best_loss = epoch, loss
            return True
        return False

    @property
    def losses(self) -> List[float]:
        return [e.loss for e in self.epochs]

    @property
    def lrs(self) -> List[float]:
        return [e.lr for e in self.epochs]

    @property
    def mean_epoch_seconds(self) -> float:
        if not self.epochs:
            return math.nan
        return float(np.mean([e.seconds for e in self.epochs]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.model_dump() for e in self.epochs], columns=TRAIN_LOG_COLUMNS)

    def write_csv(self, path: PathLike) -> Path:
        path = _prepare(path)
        self.to_frame().to_csv(path, index=False)
        return path

    def write_json(self, path: PathLike) -> Path:
        path = _prepare(path)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path


class SweepRow(BaseModel):
    """帧数扫描中的一行；失败时指标为 NaN 并记录错误"""
    D: int
    PLCC: float = math.nan
    SROCC: float = math.nan
    epoch_seconds: float = math.nan
    error: Optional[str] = None


def write_sweep_csv(rows: List[SweepRow], path: PathLike) -> Path:
    path = _prepare(path)
    frame = pd.DataFrame([r.model_dump(include=set(SWEEP_COLUMNS)) for r in rows], columns=SWEEP_COLUMNS)
    frame.to_csv(path, index=False)
    return path


def write_sweep_json(rows: List[SweepRow], path: PathLike) -> Path:
    path = _prepare(path)
    payload = [
        {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.model_dump().items()}
        for r in rows
    ]
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    return path
