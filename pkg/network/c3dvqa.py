"""
C3DVQA 网络 - 双路2D分支、3D主干学习失真可见阈值、残差掩蔽与全连接回归

数据流（B 为批量）：
    失真 B×1×D×H×W ──2D分支──> 16×D×H/4×W/4 ─┐
                                              ├─ 拼接 32 通道 ─ 3D主干 ─ sigmoid ─> 阈值 1×D×H/4×W/4
    残差 B×1×D×H×W ──2D分支──> 16×D×H/4×W/4 ─┘
    掩蔽 = avgpool4(|残差|) ⊙ 阈值 ─ 空间GAP ─> D ─ FC(D→64) ─ ReLU ─ FC(64→1) ─> 分数

2D消融变体把主干换成逐帧的2D卷积（stride 1, pad 1），每帧各自回归分数后取平均。
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from config.defaults import (
    BRANCH_CHANNELS, BRANCH_KERNEL, BRANCH_PADDING, BRANCH_STRIDE, DEFAULT_BATCH_SIZE,
    DEFAULT_FRAMES, DEFAULT_WINDOW, FC_HIDDEN, LABEL_CENTER, POOLED_FEATURE_GAIN, SPATIAL_REDUCTION,
    TRUNK_CHANNELS, TRUNK_KERNEL
)
from config.logging_config import get_logger
from engine import Tensor, absolute, avg_pool_spatial, concat, mul, reduce, relu, reshape, sigmoid
from layers import Conv2DLayer, Conv3DLayer, FCLayer, global_avg_pool, load_checkpoint, save_checkpoint
from models.errors import CheckpointError, ConfigError, ShapeError
from models.run_config import ModelVariant
from tools.video_tools import ClipOrigin, ClipPair, RawVideo, sample_eval_segments

logger = get_logger(__name__)

TrunkLayer = Union[Conv3DLayer, Conv2DLayer]


# ==================== 配置与参数 ====================

@dataclass
class ModelConfig:
    """网络结构配置"""
    frames: int = DEFAULT_FRAMES
    patch: int = DEFAULT_WINDOW
    branch_channels: int = BRANCH_CHANNELS
    trunk_channels: List[int] = field(default_factory=lambda: list(TRUNK_CHANNELS))
    fc_hidden: int = FC_HIDDEN
    variant: ModelVariant = ModelVariant.C3D

    def __post_init__(self):
        self.variant = ModelVariant(self.variant)
        self.trunk_channels = [int(c) for c in self.trunk_channels]

    def validate(self) -> "ModelConfig":
        if self.frames < 1:
            raise ConfigError(f"帧数必须为正，当前 {self.frames}")
        if self.patch < SPATIAL_REDUCTION or self.patch % SPATIAL_REDUCTION:
            raise ConfigError(f"窗口尺寸 {self.patch} 必须能被 {SPATIAL_REDUCTION} 整除")
        if not self.trunk_channels or self.trunk_channels[-1] != 1 or min(self.trunk_channels) < 1:
            raise ConfigError(f"主干通道列表必须为正且以1结尾，当前 {self.trunk_channels}")
        if self.branch_channels < 1 or self.fc_hidden < 1:
            raise ConfigError("分支通道数与全连接隐藏维度必须为正")
        return self

    @property
    def threshold_size(self) -> int:
        return self.patch // SPATIAL_REDUCTION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames": self.frames,
            "patch": self.patch,
            "branch_channels": self.branch_channels,
            "trunk_channels": list(self.trunk_channels),
            "fc_hidden": self.fc_hidden,
            "variant": self.variant.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        try:
            return cls(
                frames=int(data["frames"]),
                patch=int(data["patch"]),
                branch_channels=int(data["branch_channels"]),
                trunk_channels=list(data["trunk_channels"]),
                fc_hidden=int(data["fc_hidden"]),
                variant=ModelVariant(data["variant"]),
            ).validate()
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"网络配置无效: {e}") from e


@dataclass
class ModelParams:
    """C3DVQA 全部可学习参数"""
    config: ModelConfig
    dist_branch: List[Conv2DLayer]
    res_branch: List[Conv2DLayer]
    trunk: List[TrunkLayer]
    fc1: FCLayer
    fc2: FCLayer

    def layers(self) -> List[Tuple[str, Any]]:
        named = [(f"dist_branch.{i}", l) for i, l in enumerate(self.dist_branch)]
        named += [(f"res_branch.{i}", l) for i, l in enumerate(self.res_branch)]
        named += [(f"trunk.{i}", l) for i, l in enumerate(self.trunk)]
        named += [("fc1", self.fc1), ("fc2", self.fc2)]
        return named

    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        """固定顺序的 (名称, 参数) 列表"""
        out = []
        for name, layer in self.layers():
            out.append((f"{name}.weight", layer.weight))
            out.append((f"{name}.bias", layer.bias))
        return out

    def weights(self) -> List[Tensor]:
        """参与L2正则的权重（不含偏置）"""
        return [layer.weight for _, layer in self.layers()]

    def parameter_count(self) -> int:
        return sum(p.size for _, p in self.named_parameters())

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state(self, arrays: Mapping[str, np.ndarray]) -> None:
        """
        用名称对应的数组覆盖参数值

        Raises:
            CheckpointError: 名称集合或形状与当前网络不一致
        """
        named = self.named_parameters()
        expected = [name for name, _ in named]
        if list(arrays.keys()) != expected:
            missing = sorted(set(expected) - set(arrays))
            extra = sorted(set(arrays) - set(expected))
            raise CheckpointError(f"参数名称不匹配，缺少 {missing}，多余 {extra}")
        for name, param in named:
            value = np.asarray(arrays[name])
            if value.shape != param.shape:
                raise CheckpointError(f"参数 {name} 形状 {value.shape} 与网络 {param.shape} 不一致")
            param.data = value.astype(param.dtype)
            param.grad = None


def build_model(cfg: ModelConfig, seed: int = 0) -> ModelParams:
    """
    按配置构建网络参数（He 初始化；输出层偏置取归一化标签中点，其余偏置为0），相同种子结果逐位一致

    Raises:
        ConfigError: 配置不满足约束
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    k, c = BRANCH_KERNEL, cfg.branch_channels

    def branch() -> List[Conv2DLayer]:
        return [
            Conv2DLayer.create(1, c, k, BRANCH_STRIDE, BRANCH_PADDING, rng),
            Conv2DLayer.create(c, c, k, BRANCH_STRIDE, BRANCH_PADDING, rng),
        ]

    dist_branch = branch()
    res_branch = branch()

    trunk: List[TrunkLayer] = []
    n_in = 2 * c
    for n_out in cfg.trunk_channels:
        if cfg.variant == ModelVariant.C3D:
            trunk.append(Conv3DLayer.create(n_in, n_out, TRUNK_KERNEL, rng, stride=1, padding=(1, 1, 1)))
        else:
            trunk.append(Conv2DLayer.create(n_in, n_out, TRUNK_KERNEL, 1, 1, rng))
        n_in = n_out

    fc_in = cfg.frames if cfg.variant == ModelVariant.C3D else 1
    fc1 = FCLayer.create(fc_in, cfg.fc_hidden, rng)
    fc2 = FCLayer.create(cfg.fc_hidden, 1, rng)
    fc2.bias.data = np.full_like(fc2.bias.data, LABEL_CENTER)

    params = ModelParams(cfg, dist_branch, res_branch, trunk, fc1, fc2)
    logger.debug(f"🏗️ 网络已构建: variant={cfg.variant.value}, D={cfg.frames}, "
                 f"patch={cfg.patch}, 参数量={params.parameter_count()}")
    return params


# ==================== 前向 ====================

@dataclass
class ForwardResult:
    """一次前向的全部中间结果（均带批量维）"""
    score: Tensor                       # (B,)
    threshold: Tensor                   # B×1×D×h×w
    masked: Tensor                      # B×1×D×h×w
    dist_features: Tensor               # B×C×D×h×w
    res_features: Tensor                # B×C×D×h×w
    frame_scores: Optional[Tensor] = None  # (B, D)，仅2D消融变体


def _as_batch(x: Tensor) -> Tensor:
    return reshape(x, (1,) + x.shape) if x.ndim == 4 else x


def check_inputs(cfg: ModelConfig, distorted: Tensor, residual: Tensor) -> None:
    if distorted.shape != residual.shape:
        raise ShapeError(f"失真输入 {distorted.shape} 与残差输入 {residual.shape} 形状不一致")
    if distorted.ndim not in (4, 5):
        raise ShapeError(f"输入必须为 1×D×H×W 或 B×1×D×H×W，当前 {distorted.shape}")
    c, d, h, w = distorted.shape[-4:]
    if c != 1:
        raise ShapeError(f"输入通道必须为1（仅亮度），当前 {c}")
    if d != cfg.frames or h != cfg.patch or w != cfg.patch:
        raise ShapeError(f"输入 D×H×W={d}×{h}×{w} 与配置 {cfg.frames}×{cfg.patch}×{cfg.patch} 不一致")


def run_branch(layers: List[Conv2DLayer], x: Tensor) -> Tensor:
    """逐帧2D卷积分支，每层后接 ReLU"""
    for layer in layers:
        x = relu(layer(x))
    return x


def run_trunk(layers: List[TrunkLayer], x: Tensor) -> Tensor:
    """主干：除最后一层外接 ReLU，最后一层经 sigmoid 得到 (0,1) 内的阈值"""
    for i, layer in enumerate(layers):
        x = layer(x)
        if i < len(layers) - 1:
            x = relu(x)
    return sigmoid(x)


def mask_residual(threshold: Tensor, residual: Tensor) -> Tensor:
    """|残差| 经 4×4 平均池化降到阈值分辨率后与阈值逐元素相乘"""
    return mul(avg_pool_spatial(absolute(residual), SPATIAL_REDUCTION), threshold)


def run_network(params: ModelParams, distorted: Tensor, residual: Tensor) -> ForwardResult:
    """按变体执行完整前向，输入可带或不带批量维"""
    cfg = params.config
    check_inputs(cfg, distorted, residual)
    distorted, residual = _as_batch(distorted), _as_batch(residual)
    batch, frames = distorted.shape[0], cfg.frames

    dist_features = run_branch(params.dist_branch, distorted)
    res_features = run_branch(params.res_branch, residual)
    threshold = run_trunk(params.trunk, concat([dist_features, res_features], axis=1))
    masked = mask_residual(threshold, residual)
    pooled = global_avg_pool(masked, "spatial") * POOLED_FEATURE_GAIN  # B×1×D

    if cfg.variant == ModelVariant.C3D:
        hidden = relu(params.fc1(reshape(pooled, (batch, frames))))
        score = reshape(params.fc2(hidden), (batch,))
        return ForwardResult(score, threshold, masked, dist_features, res_features)

    hidden = relu(params.fc1(reshape(pooled, (batch * frames, 1))))
    frame_scores = reshape(params.fc2(hidden), (batch, frames))
    score = reduce("mean", frame_scores, (1,))
    return ForwardResult(score, threshold, masked, dist_features, res_features, frame_scores)


def forward(params: ModelParams, distorted: Tensor, residual: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """
    返回 (分数, 阈值图, 掩蔽残差)

    不带批量维的输入 1×D×H×W 得到0阶分数与 1×D×H/4×W/4 的阈值/掩蔽图。
    """
    result = run_network(params, distorted, residual)
    if distorted.ndim == 4:
        h = params.config.threshold_size
        shape = (1, params.config.frames, h, h)
        return reshape(result.score, ()), reshape(result.threshold, shape), reshape(result.masked, shape)
    return result.score, result.threshold, result.masked


def forward_2d_ablation(params: ModelParams, distorted: Tensor, residual: Tensor) -> Tensor:
    """2D消融变体：逐帧分数的平均"""
    if params.config.variant != ModelVariant.ABLATION_2D:
        raise ConfigError(f"当前网络变体为 {params.config.variant.value}，不是2D消融变体")
    return forward(params, distorted, residual)[0]


# ==================== 整段视频预测 ====================

@dataclass
class SegmentScore:
    origin: ClipOrigin
    score: float
    mean_threshold: float
    mean_masked: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame": self.origin.frame, "row": self.origin.row, "col": self.origin.col,
            "score": self.score, "mean_threshold": self.mean_threshold, "mean_masked": self.mean_masked,
        }


def stack_clips(clips: List[ClipPair]) -> Tuple[Tensor, Tensor]:
    distorted = Tensor(np.stack([c.distorted.data for c in clips]))
    residual = Tensor(np.stack([c.residual.data for c in clips]))
    return distorted, residual


def score_segments(params: ModelParams, segments: List[ClipPair],
                   batch_size: int = DEFAULT_BATCH_SIZE) -> List[SegmentScore]:
    """冻结参数逐批打分（不记录计算带）"""
    results: List[SegmentScore] = []
    for start in range(0, len(segments), batch_size):
        batch = segments[start:start + batch_size]
        out = run_network(params, *stack_clips(batch))
        thresholds = out.threshold.data.reshape(len(batch), -1).mean(axis=1, dtype=np.float64)
        masked = out.masked.data.reshape(len(batch), -1).mean(axis=1, dtype=np.float64)
        for i, clip in enumerate(batch):
            results.append(SegmentScore(clip.origin, float(out.score.data[i]), float(thresholds[i]), float(masked[i])))
    return results


def predict_video(params: ModelParams, distorted: RawVideo, reference: RawVideo,
                  batch_size: int = DEFAULT_BATCH_SIZE) -> float:
    """
    整段视频的质量分数：确定性平铺得到的全部片段分数的算术平均

    Raises:
        ShapeError: 视频尺寸不一致、短于 D 帧或小于窗口
    """
    return predict_segments(params, distorted, reference, batch_size)[0]


def predict_segments(params: ModelParams, distorted: RawVideo, reference: RawVideo,
                     batch_size: int = DEFAULT_BATCH_SIZE) -> Tuple[float, List[SegmentScore]]:
    cfg = params.config
    segments = sample_eval_segments(reference, distorted, cfg.frames, cfg.patch)
    scored = score_segments(params, segments, batch_size)
    return float(np.mean([s.score for s in scored])), scored


# ==================== 持久化 ====================

def save_model(path: Union[str, Path], params: ModelParams, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """保存参数与网络配置（以及调用方附加的元数据）"""
    meta = dict(metadata or {})
    meta["model"] = params.config.to_dict()
    return save_checkpoint(path, [(name, p.data) for name, p in params.named_parameters()], meta)


def load_model(path: Union[str, Path]) -> Tuple[ModelParams, Dict[str, Any]]:
    """
    读取检查点并按其中的网络配置重建网络

    Raises:
        CheckpointError: 缺少网络配置或参数与配置不符
    """
    arrays, meta = load_checkpoint(path)
    if "model" not in meta:
        raise CheckpointError(f"检查点 {path} 缺少网络配置")
    try:
        cfg = ModelConfig.from_dict(meta["model"])
    except ConfigError as e:
        raise CheckpointError(str(e)) from e
    params = build_model(cfg, seed=0)
    params.load_state(arrays)
    return params, meta
