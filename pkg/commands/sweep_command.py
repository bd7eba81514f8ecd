"""
sweep-frames 命令 - 对多个片段帧数分别训练评估，输出 D,PLCC,SROCC,epoch_seconds
"""
from pathlib import Path
from typing import Any, Dict, List, Optional

from models.report import write_sweep_csv, write_sweep_json
from models.run_config import RunConfig
from services.evaluator import sweep_frames

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class SweepFramesCommand(BaseCommand):
    command_name = "sweep-frames"

    def run(self, config: RunConfig, frames: Optional[List[int]] = None,
            out_dir: Optional[str] = None, **kwargs) -> Dict[str, Any]:
        out = Path(out_dir or config.output_dir)
        rows = sweep_frames(config, frames or config.sweep_frames, out)
        csv_path = write_sweep_csv(rows, out / "sweep.csv")
        write_sweep_json(rows, out / "sweep.json")
        return {
            "csv": str(csv_path),
            "rows": [r.model_dump() for r in rows],
            "failed": [r.D for r in rows if r.error],
        }


def register_sweep_command():
    get_registry().register("sweep-frames", SimpleCommandFactory(SweepFramesCommand), CommandConfig(
        name="sweep-frames",
        description="片段帧数扫描",
    ), {"category": "evaluation", "writes": ["sweep.csv", "sweep.json"]})
