"""
训练服务 - epoch 循环、学习率衰减与最小训练损失模型选择

一个 epoch：每个训练失真视频按 (种子, epoch, 视频ID) 派生的随机流抽取
draws_per_video 个时间起点，每个起点取全部空间窗口；片段打乱后按批训练。
"""
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from config.logging_config import get_logger
from engine import Tape, backward
from layers import AdamState, LossHyperParams, PlateauScheduler, adam_step, plateau_update, quality_loss
from models.errors import DivergenceError, SplitError
from models.manifest import DatasetManifest, DistortedEntry, load_manifest
from models.report import TrainLog
from models.run_config import RunConfig
from network import ModelParams, build_model, run_network, save_model, stack_clips
from tools.split_tools import LabelScaler, SplitPlan, make_split
from tools.video_tools import ClipPair, VideoLibrary, sample_training_clips, video_rng

logger = get_logger(__name__)


class Trainer:
    """在给定网络参数上执行 Adam 训练"""

    def __init__(self, params: ModelParams, lr: float, hyper: LossHyperParams = LossHyperParams(),
                 batch_size: int = 4, seed: int = 0, log_every: int = 1):
        self.params = params
        self.hyper = hyper
        self.batch_size = batch_size
        self.seed = seed
        self.log_every = log_every
        self.adam = AdamState(lr=lr)
        self.scheduler = PlateauScheduler(lr=lr)

    @property
    def lr(self) -> float:
        return self.adam.lr

    def train_step(self, clips: Sequence[ClipPair]) -> float:
        """一个批次：前向、损失、反向、Adam 更新，返回该批损失"""
        distorted, residual = stack_clips(list(clips))
        with Tape() as tape:
            out = run_network(self.params, distorted, residual)
            loss = quality_loss(out.score, [c.label for c in clips], self.params, self.hyper)
        value = loss.item()
        if not math.isfinite(value):
            raise DivergenceError(f"训练损失发散: {value}（lr={self.lr:.3e}）")
        backward(loss, tape)
        adam_step(self.params, self.adam)
        return value

    def fit_steps(self, clips: Sequence[ClipPair], steps: int) -> List[float]:
        """在固定片段集上做 steps 次全批量更新"""
        return [self.train_step(clips) for _ in range(steps)]

    def mse(self, clips: Sequence[ClipPair]) -> float:
        """冻结参数下的批均方误差（不含正则）"""
        out = run_network(self.params, *stack_clips(list(clips)))
        labels = np.asarray([c.label for c in clips], dtype=np.float64)
        return float(np.mean((out.score.data.astype(np.float64) - labels) ** 2))

    def epoch_clips(self, library: VideoLibrary, entries: Sequence[DistortedEntry], scaler: LabelScaler,
                    epoch: int, draws_per_video: int = 1) -> List[ClipPair]:
        cfg = self.params.config
        clips: List[ClipPair] = []
        for entry in entries:
            ref, dist = library.pair(entry)
            rng = video_rng(self.seed, epoch, entry.id)
            label = scaler.normalize(entry.score)
            for _ in range(draws_per_video):
                clips.extend(sample_training_clips(ref, dist, cfg.frames, cfg.patch, rng, label, entry.id))
        order = np.random.default_rng([self.seed, epoch]).permutation(len(clips))
        return [clips[i] for i in order]

    def run_epoch(self, clips: Sequence[ClipPair]) -> float:
        """返回按片段数加权的 epoch 平均损失"""
        total, count = 0.0, 0
        for start in range(0, len(clips), self.batch_size):
            batch = clips[start:start + self.batch_size]
            total += self.train_step(batch) * len(batch)
            count += len(batch)
        return total / count

    def fit(self, library: VideoLibrary, entries: Sequence[DistortedEntry], scaler: LabelScaler,
            epochs: int, draws_per_video: int = 1) -> TrainLog:
        """
        完整训练：结束时参数恢复为训练损失最小的 epoch

        Raises:
            DivergenceError: 出现非有限损失
        """
        if not entries:
            raise SplitError("训练集为空")
        log = TrainLog()
        best_state = None
        for epoch in range(epochs):
            start = time.perf_counter()
            clips = self.epoch_clips(library, entries, scaler, epoch, draws_per_video)
            lr_used = self.lr
            epoch_loss = self.run_epoch(clips)
            self.adam.lr = plateau_update(self.scheduler, epoch_loss)
            seconds = time.perf_counter() - start
            if log.record(epoch, epoch_loss, lr_used, seconds):
                best_state = self.params.state_dict()
            if epoch % self.log_every == 0 or epoch == epochs - 1:
                logger.info(f"🔁 epoch {epoch + 1}/{epochs}: loss={epoch_loss:.6f}, "
                            f"lr={lr_used:.3e}, {len(clips)} 个片段, {seconds:.2f}秒")
        if best_state is not None:
            self.params.load_state(best_state)
        logger.info(f"🏁 训练完成，最优 epoch={log.best_epoch}，损失={log.best_loss:.6f}")
        return log


@dataclass
class TrainResult:
    params: ModelParams
    log: TrainLog
    scaler: LabelScaler
    plan: SplitPlan
    checkpoint: Optional[Path] = None


def train_on_plan(config: RunConfig, manifest: DatasetManifest, library: VideoLibrary, plan: SplitPlan,
                  frames: Optional[int] = None) -> TrainResult:
    """在一次划分的训练侧上训练新网络"""
    entries = plan.train_entries(manifest)
    if not entries:
        raise SplitError(f"划分 seed={plan.seed} 的训练侧没有失真视频")
    scaler = LabelScaler.fit([e.score for e in entries], manifest.score_polarity)
    params = build_model(config.network_config(frames), seed=plan.seed)
    trainer = Trainer(
        params,
        lr=config.lr,
        hyper=LossHyperParams(config.lambda1, config.lambda2),
        batch_size=config.batch_size,
        seed=plan.seed,
        log_every=config.log_every,
    )
    log = trainer.fit(library, entries, scaler, config.epochs, config.draws_per_video)
    return TrainResult(params, log, scaler, plan)


def checkpoint_metadata(result: TrainResult) -> dict:
    return {
        "label_scaler": result.scaler.to_dict(),
        "best_epoch": result.log.best_epoch,
        "best_loss": result.log.best_loss,
        "seed": result.plan.seed,
        "train_references": result.plan.train_ids,
        "test_references": result.plan.test_ids,
    }


def train_from_config(config: RunConfig, out_dir: Optional[Path] = None) -> TrainResult:
    """
    按运行配置训练：以 config.seed 划分数据，在训练侧训练，
    写出 model.ckpt、train_log.csv 与 train_log.json
    """
    manifest = load_manifest(config.manifest)
    library = VideoLibrary(manifest)
    plan = make_split(manifest, config.split_fraction, config.seed)
    logger.info(f"🚀 开始训练: 训练参考视频 {plan.train_ids}，测试参考视频 {plan.test_ids}")
    result = train_on_plan(config, manifest, library, plan)

    out_dir = Path(out_dir or config.output_dir)
    result.checkpoint = save_model(out_dir / "model.ckpt", result.params, checkpoint_metadata(result))
    result.log.write_csv(out_dir / "train_log.csv")
    result.log.write_json(out_dir / "train_log.json")
    return result
