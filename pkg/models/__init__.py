"""
Models模块 - 定义所有数据模型
"""
from .errors import (
    C3DVQAError, ShapeError, AutogradError, OptimizerError, DivergenceError, CheckpointError,
    VideoFormatError, ManifestError, SplitError, MetricError, ConfigError
)
from .manifest import (
    ScorePolarity, PixelFormat, VideoSidecar, ReferenceEntry, DistortedEntry,
    DatasetManifest, load_manifest
)
from .run_config import ModelVariant, ModelConfigSchema, RunConfig, load_run_config
from .report import (
    LogisticParams, RunMetrics, EvalReport, EpochRecord, TrainLog, SweepRow,
    write_sweep_csv, write_sweep_json, REPORT_COLUMNS, SWEEP_COLUMNS, TRAIN_LOG_COLUMNS
)

__all__ = [
    # Errors
    'C3DVQAError',
    'ShapeError',
    'AutogradError',
    'OptimizerError',
    'DivergenceError',
    'CheckpointError',
    'VideoFormatError',
    'ManifestError',
    'SplitError',
    'MetricError',
    'ConfigError',

    # Dataset models
    'ScorePolarity',
    'PixelFormat',
    'VideoSidecar',
    'ReferenceEntry',
    'DistortedEntry',
    'DatasetManifest',
    'load_manifest',

    # Run configuration
    'ModelVariant',
    'ModelConfigSchema',
    'RunConfig',
    'load_run_config',

    # Reports
    'LogisticParams',
    'RunMetrics',
    'EvalReport',
    'EpochRecord',
    'TrainLog',
    'SweepRow',
    'write_sweep_csv',
    'write_sweep_json',
    'REPORT_COLUMNS',
    'SWEEP_COLUMNS',
    'TRAIN_LOG_COLUMNS',
]
