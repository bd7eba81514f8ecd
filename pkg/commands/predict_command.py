"""
predict 命令 - 用检查点对一对参考/失真视频打分
"""
from typing import Any, Dict, Optional

from config.defaults import DEFAULT_BATCH_SIZE
from network import load_model, predict_segments
from tools.split_tools import LabelScaler
from tools.video_tools import load_raw_video

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class PredictCommand(BaseCommand):
    command_name = "predict"

    def run(self, checkpoint: str, reference: str, distorted: str,
            batch_size: Optional[int] = None, **kwargs) -> Dict[str, Any]:
        params, meta = load_model(checkpoint)
        ref = load_raw_video(reference)
        dist = load_raw_video(distorted)
        score, segments = predict_segments(params, dist, ref, batch_size or DEFAULT_BATCH_SIZE)
        self._logger.info(f"🎯 {len(segments)} 个片段，平均分数 {score:.6f}")
        data: Dict[str, Any] = {
            "segments": [s.to_dict() for s in segments],
            "score": score,
        }
        if "label_scaler" in meta:
            data["scaled_score"] = LabelScaler.from_dict(meta["label_scaler"]).denormalize(score)
        return data


def register_predict_command():
    get_registry().register("predict", SimpleCommandFactory(PredictCommand), CommandConfig(
        name="predict",
        description="逐片段预测质量分数并取平均",
    ), {"category": "inference"})
