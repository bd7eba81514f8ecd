"""
psnr 命令 - PSNR 基线
"""
import math
from typing import Any, Dict

import numpy as np

from tools.metric_tools import mse_frames, psnr_video
from tools.video_tools import load_raw_video

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class PsnrCommand(BaseCommand):
    command_name = "psnr"

    def run(self, reference: str, distorted: str, **kwargs) -> Dict[str, Any]:
        ref = load_raw_video(reference)
        dist = load_raw_video(distorted)
        value = psnr_video(ref, dist)
        identical = math.isinf(value)
        return {
            # JSON 无法表示 inf，完全相同时给 null 并置 identical
            "psnr": None if identical else value,
            "identical": identical,
            "mse": float(np.mean(mse_frames(ref, dist))),
            "frames": ref.frames,
        }


def register_psnr_command():
    get_registry().register("psnr", SimpleCommandFactory(PsnrCommand), CommandConfig(
        name="psnr",
        description="参考/失真视频的 PSNR（dB）",
    ), {"category": "baseline"})
