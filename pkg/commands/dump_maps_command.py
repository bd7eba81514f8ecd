"""
dump-maps 命令 - 写出某个评估片段的中间响应图
"""
from typing import Any, Dict, List, Optional

from models.errors import ShapeError
from network import dump_maps, load_model
from tools.video_tools import load_raw_video, sample_eval_segments

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class DumpMapsCommand(BaseCommand):
    command_name = "dump-maps"

    def run(self, checkpoint: str, reference: str, distorted: str, out_dir: str,
            segment: int = 0, frames: Optional[List[int]] = None, **kwargs) -> Dict[str, Any]:
        params, _ = load_model(checkpoint)
        cfg = params.config
        segments = sample_eval_segments(load_raw_video(reference), load_raw_video(distorted),
                                        cfg.frames, cfg.patch)
        if not 0 <= segment < len(segments):
            raise ShapeError(f"片段索引 {segment} 超出 [0, {len(segments)})")
        clip = segments[segment]
        written = dump_maps(params, clip, out_dir, frames)
        return {
            "segment": {"frame": clip.origin.frame, "row": clip.origin.row, "col": clip.origin.col},
            "files": [str(p) for p in written],
        }


def register_dump_maps_command():
    get_registry().register("dump-maps", SimpleCommandFactory(DumpMapsCommand), CommandConfig(
        name="dump-maps",
        description="输出分支响应、阈值图与掩蔽残差 PGM",
    ), {"category": "inspection", "maps": ["distorted_branch", "residual_branch", "threshold", "masked_residual"]})
