"""
数据集清单与视频旁注文件的 Pydantic 模型定义
"""
import json
import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config.logging_config import get_logger
from models.errors import ManifestError, VideoFormatError

logger = get_logger(__name__)


class ScorePolarity(str, Enum):
    """主观分数方向"""
    HIGHER_IS_BETTER = "higher_is_better"  # MOS
    LOWER_IS_BETTER = "lower_is_better"    # DMOS


class PixelFormat(str, Enum):
    """原始视频像素格式"""
    GRAY = "gray"        # 纯 8-bit 亮度平面
    YUV420P = "yuv420p"  # 平面 YUV 4:2:0，只读取 Y


class VideoSidecar(BaseModel):
    """原始视频旁注：{"width", "height", "frames", "bitdepth", "pix_fmt"}"""
    width: int = Field(..., gt=0, description="帧宽度")
    height: int = Field(..., gt=0, description="帧高度")
    frames: int = Field(..., gt=0, description="帧数")
    bitdepth: int = Field(default=8, description="采样位深，仅支持8")
    pix_fmt: PixelFormat = Field(default=PixelFormat.GRAY, description="像素格式")

    @field_validator("bitdepth")
    @classmethod
    def _only_8bit(cls, value: int) -> int:
        if value != 8:
            raise ValueError(f"仅支持8位视频，当前 bitdepth={value}")
        return value

    @model_validator(mode="after")
    def _even_for_420(self):
        if self.pix_fmt == PixelFormat.YUV420P and (self.width % 2 or self.height % 2):
            raise ValueError("yuv420p 要求宽高均为偶数")
        return self

    @property
    def luma_bytes(self) -> int:
        return self.width * self.height

    @property
    def frame_bytes(self) -> int:
        if self.pix_fmt == PixelFormat.YUV420P:
            return self.luma_bytes * 3 // 2
        return self.luma_bytes

    @property
    def expected_size(self) -> int:
        return self.frame_bytes * self.frames

    @classmethod
    def load(cls, path: Union[str, Path]) -> "VideoSidecar":
        try:
            return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise VideoFormatError(f"无法读取旁注文件 {path}: {e}") from e
        except ValidationError as e:
            raise VideoFormatError(f"旁注文件 {path} 无效: {e}") from e


class ReferenceEntry(BaseModel):
    """参考视频条目"""
    id: str = Field(..., min_length=1, description="参考视频ID")
    file: str = Field(..., min_length=1, description="原始视频文件路径")


class DistortedEntry(BaseModel):
    """失真视频条目"""
    id: str = Field(..., min_length=1, description="失真视频ID")
    reference_id: str = Field(..., min_length=1, description="所属参考视频ID")
    file: str = Field(..., min_length=1, description="原始视频文件路径")
    score: float = Field(..., description="主观分数（MOS/DMOS）")
    distortion: str = Field(default="", description="失真类型标签")

    @field_validator("score")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"主观分数必须有限，当前 {value}")
        return value


class DatasetManifest(BaseModel):
    """数据集清单：参考视频、失真视频及主观分数方向"""
    name: str = Field(default="dataset", description="数据集名称")
    score_polarity: ScorePolarity = Field(..., description="主观分数方向")
    references: List[ReferenceEntry] = Field(..., min_length=1)
    distorted: List[DistortedEntry] = Field(..., min_length=1)
    base_dir: Optional[str] = Field(default=None, description="相对路径的基准目录")

    @model_validator(mode="after")
    def _check_links(self):
        ref_ids = [r.id for r in self.references]
        if len(set(ref_ids)) != len(ref_ids):
            raise ValueError("参考视频ID重复")
        dist_ids = [d.id for d in self.distorted]
        if len(set(dist_ids)) != len(dist_ids):
            raise ValueError("失真视频ID重复")
        known = set(ref_ids)
        dangling = sorted({d.reference_id for d in self.distorted if d.reference_id not in known})
        if dangling:
            raise ValueError(f"失真视频引用了不存在的参考视频: {', '.join(dangling)}")
        return self

    def reference(self, ref_id: str) -> ReferenceEntry:
        for entry in self.references:
            if entry.id == ref_id:
                return entry
        raise ManifestError(f"参考视频不存在: {ref_id}")

    def distorted_of(self, ref_ids) -> List[DistortedEntry]:
        """按清单顺序返回属于给定参考视频集合的失真视频"""
        wanted = set(ref_ids)
        return [d for d in self.distorted if d.reference_id in wanted]

    def groups(self) -> Dict[str, List[DistortedEntry]]:
        grouped: Dict[str, List[DistortedEntry]] = {r.id: [] for r in self.references}
        for entry in self.distorted:
            grouped[entry.reference_id].append(entry)
        return grouped

    def resolve(self, file: str) -> Path:
        path = Path(file)
        if path.is_absolute() or self.base_dir is None:
            return path
        return Path(self.base_dir) / path


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """
    读取数据集清单JSON，相对文件路径以清单所在目录为基准

    Raises:
        ManifestError: 文件不可读、JSON无效或清单不满足约束
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ManifestError(f"无法读取清单 {path}: {e}") from e
    payload.setdefault("base_dir", str(path.parent))
    try:
        manifest = DatasetManifest.model_validate(payload)
    except ValidationError as e:
        raise ManifestError(f"清单 {path} 无效: {e}") from e
    logger.info(f"📋 清单已加载: {manifest.name} "
                f"({len(manifest.references)} 个参考视频, {len(manifest.distorted)} 个失真视频)")
    return manifest
