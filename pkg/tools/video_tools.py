"""
原始视频工具 - 8位亮度读写、残差计算与片段采样

视频以平面原始字节存放，旁注JSON描述 {"width", "height", "frames", "bitdepth", "pix_fmt"}。
只使用亮度（Y）平面，不做缩放。
"""
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from config.defaults import DEFAULT_WINDOW, PIXEL_MAX
from config.logging_config import get_logger
from engine import Tensor, get_default_dtype
from models.errors import ShapeError, VideoFormatError
from models.manifest import DatasetManifest, DistortedEntry, PixelFormat, VideoSidecar

logger = get_logger(__name__)

PathLike = Union[str, Path]
SidecarLike = Union[VideoSidecar, dict, PathLike, None]


@dataclass(frozen=True)
class RawVideo:
    """8位亮度视频，luma 形状为 (frames, height, width)"""
    width: int
    height: int
    luma: np.ndarray

    def __post_init__(self):
        if self.luma.dtype != np.uint8 or self.luma.ndim != 3:
            raise VideoFormatError(f"亮度数据必须是 uint8 的 (帧, 高, 宽) 数组，当前 {self.luma.dtype} {self.luma.shape}")
        if self.luma.shape[1:] != (self.height, self.width):
            raise VideoFormatError(f"亮度数组 {self.luma.shape} 与 {self.width}x{self.height} 不一致")

    @property
    def frames(self) -> int:
        return self.luma.shape[0]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.luma.shape

    @classmethod
    def from_array(cls, luma: np.ndarray) -> "RawVideo":
        luma = np.ascontiguousarray(luma, dtype=np.uint8)
        return cls(width=luma.shape[2], height=luma.shape[1], luma=luma)


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _resolve_sidecar(path: Path, sidecar: SidecarLike) -> VideoSidecar:
    if isinstance(sidecar, VideoSidecar):
        return sidecar
    if isinstance(sidecar, dict):
        try:
            return VideoSidecar.model_validate(sidecar)
        except ValueError as e:
            raise VideoFormatError(f"旁注无效: {e}") from e
    return VideoSidecar.load(sidecar if sidecar is not None else sidecar_path(path))


def load_raw_video(path: PathLike, sidecar: SidecarLike = None) -> RawVideo:
    """
    读取原始视频（缺省旁注为 <path>.json）

    Raises:
        VideoFormatError: 文件不可读、旁注无效或文件大小与旁注不符
    """
    path = Path(path)
    meta = _resolve_sidecar(path, sidecar)
    try:
        raw = np.fromfile(path, dtype=np.uint8)
    except OSError as e:
        raise VideoFormatError(f"无法读取视频 {path}: {e}") from e
    if raw.size != meta.expected_size:
        raise VideoFormatError(
            f"视频 {path} 大小为 {raw.size} 字节，旁注声明 {meta.width}x{meta.height}x{meta.frames} "
            f"({meta.pix_fmt.value}) 需要 {meta.expected_size} 字节"
        )
    frames = raw.reshape(meta.frames, meta.frame_bytes)[:, :meta.luma_bytes]
    luma = np.ascontiguousarray(frames).reshape(meta.frames, meta.height, meta.width)
    logger.debug(f"🎞️ 已读取 {path.name}: {meta.width}x{meta.height}, {meta.frames} 帧")
    return RawVideo(meta.width, meta.height, luma)


def write_raw_video(video: RawVideo, path: PathLike,
                    pix_fmt: PixelFormat = PixelFormat.GRAY) -> Path:
    """写出原始视频及旁注；yuv420p 的色度平面填充中性值128"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = VideoSidecar(width=video.width, height=video.height, frames=video.frames, pix_fmt=pix_fmt)
    if pix_fmt == PixelFormat.YUV420P:
        chroma = np.full((video.frames, meta.frame_bytes - meta.luma_bytes), 128, dtype=np.uint8)
        payload = np.concatenate([video.luma.reshape(video.frames, -1), chroma], axis=1)
    else:
        payload = video.luma
    np.ascontiguousarray(payload).tofile(path)
    sidecar_path(path).write_text(meta.model_dump_json(), encoding="utf-8")
    return path


# ==================== 片段采样 ====================

@dataclass(frozen=True)
class ClipOrigin:
    video_id: str
    frame: int
    row: int
    col: int


@dataclass
class ClipPair:
    """一个训练/测试片段：失真亮度 [0,1] 与残差 [-1,1]，形状均为 1×D×h×w"""
    distorted: Tensor
    residual: Tensor
    label: float
    origin: ClipOrigin

    @property
    def frames(self) -> int:
        return self.distorted.shape[1]


def check_congruent(ref: RawVideo, dist: RawVideo, frames: int, window: int) -> None:
    if ref.shape != dist.shape:
        raise ShapeError(f"参考视频 {ref.shape} 与失真视频 {dist.shape} 尺寸不一致")
    if frames < 1 or ref.frames < frames:
        raise ShapeError(f"视频只有 {ref.frames} 帧，不足一个 {frames} 帧片段")
    if window < 1 or ref.height < window or ref.width < window:
        raise ShapeError(f"帧尺寸 {ref.width}x{ref.height} 小于窗口 {window}")


def spatial_anchors(height: int, width: int, window: int) -> List[Tuple[int, int]]:
    """从 (0,0) 开始的非重叠窗口左上角，丢弃右侧与底部余量"""
    return [(r * window, c * window) for r in range(height // window) for c in range(width // window)]


def temporal_anchors(frames_total: int, frames: int) -> List[int]:
    """从第0帧起步长为 D 的片段起点，丢弃末尾不完整片段"""
    return [k * frames for k in range(frames_total // frames)]


def make_clip(ref: RawVideo, dist: RawVideo, frame: int, row: int, col: int,
              frames: int, window: int, label: float = 0.0, video_id: str = "") -> ClipPair:
    sl = (slice(frame, frame + frames), slice(row, row + window), slice(col, col + window))
    d = dist.luma[sl].astype(np.float64) / PIXEL_MAX
    r = ref.luma[sl].astype(np.float64) / PIXEL_MAX
    dtype = get_default_dtype()
    return ClipPair(
        distorted=Tensor(d[None].astype(dtype)),
        residual=Tensor((r - d)[None].astype(dtype)),
        label=float(label),
        origin=ClipOrigin(video_id, frame, row, col),
    )


def sample_training_clips(ref: RawVideo, dist: RawVideo, frames: int, window: int = DEFAULT_WINDOW,
                          rng: Optional[np.random.Generator] = None, label: float = 0.0,
                          video_id: str = "") -> List[ClipPair]:
    """
    训练采样：一个随机时间起点 × 全部空间窗口

    Raises:
        ShapeError: 视频过短、过小或参考/失真尺寸不一致
    """
    if rng is None:
        raise ValueError("训练采样需要显式的随机数生成器")
    check_congruent(ref, dist, frames, window)
    frame = int(rng.integers(0, ref.frames - frames + 1))
    return [make_clip(ref, dist, frame, row, col, frames, window, label, video_id)
            for row, col in spatial_anchors(ref.height, ref.width, window)]


def sample_eval_segments(ref: RawVideo, dist: RawVideo, frames: int, window: int = DEFAULT_WINDOW,
                         label: float = 0.0, video_id: str = "") -> List[ClipPair]:
    """测试采样：确定性的时间平铺 × 空间平铺"""
    check_congruent(ref, dist, frames, window)
    return [make_clip(ref, dist, frame, row, col, frames, window, label, video_id)
            for frame in temporal_anchors(ref.frames, frames)
            for row, col in spatial_anchors(ref.height, ref.width, window)]


def video_rng(seed: int, epoch: int, video_id: str) -> np.random.Generator:
    """按 (种子, epoch, 视频ID) 派生独立随机流，采样结果与遍历顺序无关"""
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, zlib.crc32(video_id.encode("utf-8"))]))


class VideoLibrary:
    """按清单懒加载原始视频并缓存，可在线程间共享"""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._cache: Dict[str, RawVideo] = {}
        self._lock = threading.Lock()

    def load(self, file: str) -> RawVideo:
        with self._lock:
            video = self._cache.get(file)
        if video is None:
            video = load_raw_video(self.manifest.resolve(file))
            with self._lock:
                self._cache[file] = video
        return video

    def pair(self, entry: DistortedEntry) -> Tuple[RawVideo, RawVideo]:
        """返回 (参考视频, 失真视频)"""
        reference = self.manifest.reference(entry.reference_id)
        return self.load(reference.file), self.load(entry.file)

    def __len__(self) -> int:
        return len(self._cache)
