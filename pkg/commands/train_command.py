"""
train 命令 - 在 config.seed 划分的训练侧训练并保存最小训练损失的检查点
"""
from pathlib import Path
from typing import Any, Dict, Optional

from models.run_config import RunConfig
from services.trainer import train_from_config

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class TrainCommand(BaseCommand):
    command_name = "train"

    def run(self, config: RunConfig, out_dir: Optional[str] = None, **kwargs) -> Dict[str, Any]:
        out = Path(out_dir or config.output_dir)
        result = train_from_config(config, out)
        return {
            "checkpoint": str(result.checkpoint),
            "train_log": str(out / "train_log.csv"),
            "epochs": len(result.log.epochs),
            "best_epoch": result.log.best_epoch,
            "best_loss": result.log.best_loss,
            "losses": result.log.losses,
            "lrs": result.log.lrs,
            "train_references": result.plan.train_ids,
            "test_references": result.plan.test_ids,
        }


def register_train_command():
    get_registry().register("train", SimpleCommandFactory(TrainCommand), CommandConfig(
        name="train",
        description="训练 C3DVQA 网络，保存检查点与训练日志",
    ), {"category": "training", "writes": ["model.ckpt", "train_log.csv", "train_log.json"]})
