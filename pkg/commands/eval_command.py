"""
eval 命令 - 重复划分评估协议，输出每次划分与中位数汇总
"""
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from config.logging_config import get_logger
from models.errors import CheckpointError, ConfigError, SplitError
from models.manifest import DatasetManifest, load_manifest
from models.run_config import RunConfig
from network import load_model
from services.evaluator import NetworkScorer, PsnrScorer, VideoScorer, evaluate_plan, evaluate_repeats
from services.trainer import train_on_plan
from tools.split_tools import LabelScaler, SplitPlan
from tools.video_tools import VideoLibrary

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry

logger = get_logger(__name__)

SCORERS = ("c3dvqa", "psnr")


class EvalCommand(BaseCommand):
    command_name = "eval"

    def run(self, config: RunConfig, checkpoint: Optional[str] = None, scorer: str = "c3dvqa",
            out_dir: Optional[str] = None, **kwargs) -> Dict[str, Any]:
        if scorer not in SCORERS:
            raise ConfigError(f"未知打分器 '{scorer}'，可选: {', '.join(SCORERS)}")
        manifest = load_manifest(config.manifest)
        library = VideoLibrary(manifest)

        if scorer == "psnr":
            psnr = PsnrScorer(manifest.score_polarity)
            report = evaluate_repeats(config, lambda plan, run: psnr, manifest, library, scorer_name=scorer)
        elif config.train_per_repeat:
            def factory(plan: SplitPlan, run: int) -> VideoScorer:
                result = train_on_plan(config, manifest, library, plan)
                return NetworkScorer(result.params, result.scaler, config.batch_size)

            report = evaluate_repeats(config, factory, manifest, library, scorer_name=scorer)
        else:
            network, plan = self._checkpoint_scorer(config, checkpoint, manifest)
            if config.repeats > 1:
                logger.warning(f"⚠️ 固定检查点只在其训练划分的测试侧评估一次，忽略 repeats={config.repeats}；"
                               f"多次划分请使用 train_per_repeat")
            report = evaluate_plan(manifest, library, plan, network, scorer_name=scorer)

        out = Path(out_dir or config.output_dir)
        csv_path = report.write_csv(out / "eval_report.csv")
        report.write_json(out / "eval_report.json")
        return {
            "report": str(csv_path),
            "median_plcc": report.median_plcc,
            "median_srocc": report.median_srocc,
            "runs": [r.row() for r in report.runs],
            "test_references": [r.test_references for r in report.runs],
        }

    @staticmethod
    def _checkpoint_scorer(config: RunConfig, checkpoint: Optional[str],
                           manifest: DatasetManifest) -> Tuple[NetworkScorer, SplitPlan]:
        """
        载入检查点并恢复其训练时的划分

        Raises:
            CheckpointError: 网络配置不一致或检查点未记录训练划分
            SplitError: 记录的划分与当前清单不符
        """
        if not checkpoint:
            raise ConfigError("评估需要 --checkpoint，或在配置中设置 train_per_repeat=true")
        params, meta = load_model(checkpoint)
        expected = config.network_config().to_dict()
        if params.config.to_dict() != expected:
            raise CheckpointError(f"检查点网络配置 {params.config.to_dict()} 与运行配置 {expected} 不一致")
        missing = [k for k in ("seed", "train_references", "test_references") if k not in meta]
        if missing:
            raise CheckpointError(f"检查点未记录训练划分 ({', '.join(missing)})，无法排除训练内容")

        plan = SplitPlan(seed=int(meta["seed"]), train_ids=list(meta["train_references"]),
                         test_ids=list(meta["test_references"]))
        overlap = set(plan.train_ids) & set(plan.test_ids)
        if overlap:
            raise SplitError(f"检查点记录的划分内容重叠: {sorted(overlap)}")
        for ref_id in plan.train_ids + plan.test_ids:
            manifest.reference(ref_id)

        scaler = LabelScaler.from_dict(meta["label_scaler"]) if "label_scaler" in meta else None
        return NetworkScorer(params, scaler, config.batch_size), plan


def register_eval_command():
    get_registry().register("eval", SimpleCommandFactory(EvalCommand), CommandConfig(
        name="eval",
        description="按重复随机划分评估 PLCC / SROCC 并取中位数；固定检查点只评估其训练划分的测试侧",
    ), {"category": "evaluation", "scorers": list(SCORERS)})
