"""
响应可视化 - 把分支响应、阈值图与掩蔽残差逐帧写成灰度 PGM
"""
from pathlib import Path
from typing import List, Optional, Sequence, Union

from config.logging_config import get_logger
from models.errors import C3DVQAError, ShapeError
from tools.pgm_tools import normalize_map, write_pgm
from tools.video_tools import ClipPair

from .c3dvqa import ModelParams, run_network

logger = get_logger(__name__)

MAP_KINDS = ("distorted_branch", "residual_branch", "threshold", "masked_residual")


def dump_maps(params: ModelParams, clip: ClipPair, out_dir: Union[str, Path],
              frames: Optional[Sequence[int]] = None) -> List[Path]:
    """
    每个请求帧写出四张图：失真分支响应（通道均值）、残差分支响应、阈值图、掩蔽残差

    每张图独立 min-max 归一化到 [0,255]，尺寸为 H/4 × W/4。

    Raises:
        ShapeError: 帧索引越界
        C3DVQAError: 输出目录不可写
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise C3DVQAError(f"无法创建输出目录 {out_dir}: {e}") from e

    result = run_network(params, clip.distorted, clip.residual)
    depth = params.config.frames
    frames = list(range(depth)) if frames is None else [int(t) for t in frames]
    bad = [t for t in frames if not 0 <= t < depth]
    if bad:
        raise ShapeError(f"帧索引 {bad} 超出 [0, {depth})")

    sources = {
        "distorted_branch": result.dist_features.data[0],   # C×D×h×w
        "residual_branch": result.res_features.data[0],
        "threshold": result.threshold.data[0],
        "masked_residual": result.masked.data[0],
    }
    written = []
    for t in frames:
        for kind in MAP_KINDS:
            image = normalize_map(sources[kind][:, t])
            written.append(write_pgm(image, out_dir / f"frame{t:03d}_{kind}.pgm"))
    logger.info(f"🖼️ 已写出 {len(written)} 张响应图到 {out_dir}")
    return written
