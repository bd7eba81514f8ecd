"""
Tools模块 - 视频读写与采样、数据划分、评估指标、合成数据与图像输出
"""
from .video_tools import (
    RawVideo, ClipOrigin, ClipPair, VideoLibrary,
    load_raw_video, write_raw_video, sample_training_clips, sample_eval_segments,
    make_clip, spatial_anchors, temporal_anchors, video_rng
)
from .split_tools import SplitPlan, LabelScaler, make_split
from .metric_tools import (
    ScorePairs, srocc, plcc_after_logistic, logistic4, fit_logistic,
    psnr_video, median, evaluate_scores, aggregate_runs
)
from .synthetic_tools import NOISE_SIGMAS, moving_texture, add_noise, make_noise_dataset, synthetic_clip_pairs
from .pgm_tools import normalize_map, write_pgm, read_pgm

__all__ = [
    # Video tools
    'RawVideo',
    'ClipOrigin',
    'ClipPair',
    'VideoLibrary',
    'load_raw_video',
    'write_raw_video',
    'sample_training_clips',
    'sample_eval_segments',
    'make_clip',
    'spatial_anchors',
    'temporal_anchors',
    'video_rng',

    # Split tools
    'SplitPlan',
    'LabelScaler',
    'make_split',

    # Metric tools
    'ScorePairs',
    'srocc',
    'plcc_after_logistic',
    'logistic4',
    'fit_logistic',
    'psnr_video',
    'median',
    'evaluate_scores',
    'aggregate_runs',

    # Synthetic data
    'NOISE_SIGMAS',
    'moving_texture',
    'add_noise',
    'make_noise_dataset',
    'synthetic_clip_pairs',

    # Images
    'normalize_map',
    'write_pgm',
    'read_pgm',
]
