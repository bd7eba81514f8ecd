"""
Network模块 - C3DVQA 网络结构、整段视频预测与响应可视化
"""
from .c3dvqa import (
    ModelConfig, ModelParams, ForwardResult, SegmentScore,
    build_model, run_branch, run_trunk, run_network, forward, forward_2d_ablation, mask_residual,
    score_segments, predict_video, predict_segments, stack_clips, save_model, load_model
)
from .visualize import dump_maps, MAP_KINDS

__all__ = [
    'ModelConfig',
    'ModelParams',
    'ForwardResult',
    'SegmentScore',
    'build_model',
    'run_branch',
    'run_trunk',
    'run_network',
    'forward',
    'forward_2d_ablation',
    'mask_residual',
    'score_segments',
    'predict_video',
    'predict_segments',
    'stack_clips',
    'save_model',
    'load_model',
    'dump_maps',
    'MAP_KINDS',
]
