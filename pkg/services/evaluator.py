"""
评估服务 - 可插拔打分器、重复划分评估协议与帧数扫描
"""
import math
from pathlib import Path
from typing import Callable, List, Optional, Protocol, Sequence

from config.defaults import DEFAULT_BATCH_SIZE, PSNR_CAP_DB
from config.logging_config import get_logger
from models.errors import SplitError
from models.manifest import DatasetManifest, ScorePolarity, load_manifest
from models.report import EvalReport, RunMetrics, SweepRow
from models.run_config import RunConfig
from network import ModelParams, predict_video
from tools.metric_tools import aggregate_runs, evaluate_scores, psnr_video
from tools.split_tools import LabelScaler, SplitPlan, make_split
from tools.video_tools import RawVideo, VideoLibrary

from .trainer import train_on_plan

logger = get_logger(__name__)


class VideoScorer(Protocol):
    """打分器：给定参考/失真视频返回与清单分数方向一致的预测分数"""
    name: str

    def score(self, reference: RawVideo, distorted: RawVideo) -> float:
        ...


class NetworkScorer:
    """C3DVQA 网络打分，有归一化器时映射回清单分数的方向与量纲"""
    name = "c3dvqa"

    def __init__(self, params: ModelParams, scaler: Optional[LabelScaler] = None,
                 batch_size: int = DEFAULT_BATCH_SIZE):
        self.params = params
        self.scaler = scaler
        self.batch_size = batch_size

    def score(self, reference: RawVideo, distorted: RawVideo) -> float:
        value = predict_video(self.params, distorted, reference, self.batch_size)
        return self.scaler.denormalize(value) if self.scaler else value


class PsnrScorer:
    """PSNR 基线；分数越低越好的数据集上取负，完全相同的视频按上限截断"""
    name = "psnr"

    def __init__(self, polarity: ScorePolarity = ScorePolarity.HIGHER_IS_BETTER):
        self.polarity = ScorePolarity(polarity)

    def score(self, reference: RawVideo, distorted: RawVideo) -> float:
        value = min(psnr_video(reference, distorted), PSNR_CAP_DB)
        return -value if self.polarity == ScorePolarity.LOWER_IS_BETTER else value


ScorerFactory = Callable[[SplitPlan, int], VideoScorer]


def evaluate_split(manifest: DatasetManifest, library: VideoLibrary, plan: SplitPlan,
                   scorer: VideoScorer, run: int = 0) -> RunMetrics:
    """
    对一次划分的测试侧打分并计算 PLCC / SROCC

    Raises:
        SplitError: 测试侧为空
    """
    entries = plan.test_entries(manifest)
    if not entries:
        raise SplitError(f"划分 seed={plan.seed} 的测试侧没有失真视频")
    predicted = [scorer.score(*library.pair(entry)) for entry in entries]
    subjective = [entry.score for entry in entries]
    plcc, srocc, logistic = evaluate_scores(predicted, subjective)
    logger.info(f"📏 第 {run} 次划分 (seed={plan.seed}, {scorer.name}): "
                f"PLCC={plcc:.4f}, SROCC={srocc:.4f}, 测试视频 {len(entries)} 个")
    return RunMetrics(run=run, seed=plan.seed, n_test=len(entries), plcc=plcc, srocc=srocc,
                      logistic=logistic, test_references=plan.test_ids)


def evaluate_repeats(config: RunConfig, scorer_factory: ScorerFactory,
                     manifest: Optional[DatasetManifest] = None,
                     library: Optional[VideoLibrary] = None,
                     scorer_name: str = "c3dvqa") -> EvalReport:
    """repeats 次划分（种子依次为 seed, seed+1, ...），结果取中位数"""
    manifest = manifest or load_manifest(config.manifest)
    library = library or VideoLibrary(manifest)
    runs = []
    for run in range(config.repeats):
        plan = make_split(manifest, config.split_fraction, config.seed + run)
        runs.append(evaluate_split(manifest, library, plan, scorer_factory(plan, run), run))
    return aggregate_runs(runs, scorer=scorer_name)


def evaluate_plan(manifest: DatasetManifest, library: VideoLibrary, plan: SplitPlan,
                  scorer: VideoScorer, scorer_name: str = "c3dvqa") -> EvalReport:
    """只在给定划分的测试侧评估一次"""
    return aggregate_runs([evaluate_split(manifest, library, plan, scorer)], scorer=scorer_name)


def sweep_frames(config: RunConfig, frames_list: Sequence[int],
                 out_dir: Optional[Path] = None) -> List[SweepRow]:
    """
    对每个片段帧数 D 重新训练并评估；某个 D 失败时记录错误并继续
    """
    manifest = load_manifest(config.manifest)
    library = VideoLibrary(manifest)
    rows: List[SweepRow] = []
    for frames in frames_list:
        epoch_seconds: List[float] = []

        def factory(plan: SplitPlan, run: int) -> VideoScorer:
            result = train_on_plan(config, manifest, library, plan, frames=frames)
            epoch_seconds.append(result.log.mean_epoch_seconds)
            return NetworkScorer(result.params, result.scaler, config.batch_size)

        logger.info(f"🎬 帧数扫描: D={frames}")
        try:
            report = evaluate_repeats(config, factory, manifest, library)
            if out_dir is not None:
                report.write_csv(Path(out_dir) / f"eval_D{frames}.csv")
            rows.append(SweepRow(D=frames, PLCC=report.median_plcc, SROCC=report.median_srocc,
                                 epoch_seconds=float(sum(epoch_seconds) / len(epoch_seconds))))
        except Exception as e:
            logger.error(f"❌ D={frames} 失败: {e}")
            seconds = sum(epoch_seconds) / len(epoch_seconds) if epoch_seconds else math.nan
            rows.append(SweepRow(D=frames, epoch_seconds=seconds, error=str(e)))
    return rows
