"""
运行配置的 Pydantic 模型定义与加载
"""
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config.defaults import (
    BRANCH_CHANNELS, DEFAULT_BATCH_SIZE, DEFAULT_DRAWS_PER_VIDEO, DEFAULT_EPOCHS, DEFAULT_FRAMES,
    DEFAULT_LAMBDA1, DEFAULT_LAMBDA2, DEFAULT_REPEATS, DEFAULT_SPLIT_FRACTION, DEFAULT_WINDOW,
    FC_HIDDEN, PRESETS, SPATIAL_REDUCTION, SWEEP_FRAMES, TRUNK_CHANNELS
)
from config.logging_config import get_logger
from models.errors import ConfigError

logger = get_logger(__name__)


class ModelVariant(str, Enum):
    """网络变体"""
    C3D = "c3d"             # 3D卷积主干
    ABLATION_2D = "2d"      # 逐帧2D主干，帧分数取平均


class ModelConfigSchema(BaseModel):
    """网络结构配置（帧数与窗口尺寸由 RunConfig 给出）"""
    branch_channels: int = Field(default=BRANCH_CHANNELS, ge=1)
    trunk_channels: List[int] = Field(default_factory=lambda: list(TRUNK_CHANNELS), min_length=1)
    fc_hidden: int = Field(default=FC_HIDDEN, ge=1)
    variant: ModelVariant = Field(default=ModelVariant.C3D)

    @field_validator("trunk_channels")
    @classmethod
    def _ends_in_one(cls, value: List[int]) -> List[int]:
        if value[-1] != 1 or any(c < 1 for c in value):
            raise ValueError(f"主干通道列表必须为正且以1结尾，当前 {value}")
        return value


class RunConfig(BaseModel):
    """训练 / 评估运行配置（扁平JSON，命令行参数可覆盖）"""
    manifest: str = Field(..., description="数据集清单路径")
    model: ModelConfigSchema = Field(default_factory=ModelConfigSchema)
    frames: int = Field(default=DEFAULT_FRAMES, ge=1, description="片段帧数 D")
    window: int = Field(default=DEFAULT_WINDOW, ge=SPATIAL_REDUCTION, description="空间窗口边长")
    preset: Optional[str] = Field(default=None, description="学习率预设：live / csiq")
    lr: Optional[float] = Field(default=None, gt=0, description="初始学习率，缺省取预设")
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=1)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)
    draws_per_video: int = Field(default=DEFAULT_DRAWS_PER_VIDEO, ge=1)
    lambda1: float = Field(default=DEFAULT_LAMBDA1, ge=0)
    lambda2: float = Field(default=DEFAULT_LAMBDA2, ge=0)
    seed: int = Field(default=0, ge=0)
    repeats: int = Field(default=DEFAULT_REPEATS, ge=1)
    split_fraction: float = Field(default=DEFAULT_SPLIT_FRACTION, gt=0, lt=1)
    train_per_repeat: bool = Field(default=False, description="评估时每次划分都重新训练")
    sweep_frames: List[int] = Field(default_factory=lambda: list(SWEEP_FRAMES), min_length=1)
    output_dir: str = Field(default="runs")
    log_every: int = Field(default=1, ge=1, description="每隔多少个epoch输出一次日志")
    timeout: Optional[int] = Field(default=None, ge=1, description="命令超时（秒）")

    @field_validator("window")
    @classmethod
    def _window_divisible(cls, value: int) -> int:
        if value % SPATIAL_REDUCTION:
            raise ValueError(f"窗口尺寸必须能被 {SPATIAL_REDUCTION} 整除，当前 {value}")
        return value

    @model_validator(mode="after")
    def _resolve_lr(self):
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"未知预设 '{self.preset}'，可选: {', '.join(PRESETS)}")
        if self.lr is None:
            self.lr = PRESETS[self.preset or "live"]["lr"]
        return self

    def check_paths(self) -> None:
        """启动前检查路径可用"""
        if not Path(self.manifest).is_file():
            raise ConfigError(f"清单文件不存在: {self.manifest}")
        out = Path(self.output_dir)
        if out.exists() and not out.is_dir():
            raise ConfigError(f"输出路径不是目录: {self.output_dir}")

    def network_config(self, frames: Optional[int] = None):
        """按当前配置构造网络结构配置"""
        from network.c3dvqa import ModelConfig

        return ModelConfig(
            frames=frames or self.frames,
            patch=self.window,
            branch_channels=self.model.branch_channels,
            trunk_channels=list(self.model.trunk_channels),
            fc_hidden=self.model.fc_hidden,
            variant=self.model.variant,
        )


def load_run_config(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Dict[str, Any]] = None,
                    check_paths: bool = True) -> RunConfig:
    """
    读取JSON配置并应用覆盖项（值为None的覆盖项忽略）

    配置文件中的相对清单路径以配置文件所在目录为基准。
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ConfigError(f"无法读取配置 {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"配置 {path} 必须是JSON对象")
        manifest = data.get("manifest")
        if isinstance(manifest, str) and not Path(manifest).is_absolute():
            data["manifest"] = str(path.parent / manifest)

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"运行配置无效: {e}") from e
    if check_paths:
        config.check_paths()
    logger.info(f"⚙️ 运行配置: D={config.frames}, 窗口={config.window}, lr={config.lr:.1e}, "
                f"epochs={config.epochs}, batch={config.batch_size}, seed={config.seed}")
    return config
