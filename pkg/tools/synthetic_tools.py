"""
合成数据工具 - 带运动的程序化纹理参考视频与分级高斯噪声失真

噪声强度即主观分数（越低越好），用作排序的真值。
"""
import json
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from config.logging_config import get_logger
from models.manifest import PixelFormat, ScorePolarity
from tools.video_tools import ClipPair, RawVideo, make_clip, write_raw_video

logger = get_logger(__name__)

NOISE_SIGMAS = (2.0, 5.0, 10.0, 20.0, 35.0)


def moving_texture(width: int, height: int, frames: int, rng: np.random.Generator,
                   components: int = 4) -> RawVideo:
    """若干漂移正弦光栅叠加而成的纹理视频，亮度落在 [32, 224]"""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    video = np.zeros((frames, height, width), dtype=np.float64)
    for _ in range(components):
        fx, fy = rng.uniform(0.02, 0.15, size=2) * rng.choice([-1.0, 1.0], size=2)
        vx, vy = rng.uniform(-2.0, 2.0, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amplitude = rng.uniform(0.5, 1.0)
        for t in range(frames):
            video[t] += amplitude * np.sin(2.0 * np.pi * (fx * (xx - vx * t) + fy * (yy - vy * t)) + phase)
    low, high = video.min(), video.max()
    video = 32.0 + (video - low) / max(high - low, 1e-12) * 192.0
    return RawVideo.from_array(np.round(video).astype(np.uint8))


def add_noise(video: RawVideo, sigma: float, rng: np.random.Generator) -> RawVideo:
    noisy = video.luma.astype(np.float64) + rng.normal(0.0, sigma, size=video.luma.shape)
    return RawVideo.from_array(np.clip(np.round(noisy), 0, 255).astype(np.uint8))


def make_noise_dataset(out_dir: Union[str, Path], n_refs: int = 6, sigmas: Sequence[float] = NOISE_SIGMAS,
                       width: int = 64, height: int = 64, frames: int = 16, seed: int = 0,
                       pix_fmt: PixelFormat = PixelFormat.GRAY) -> Path:
    """
    在 out_dir 下生成参考/失真视频、旁注与 manifest.json，返回清单路径

    分数为噪声标准差，方向为 lower_is_better。
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    references, distorted = [], []
    for i in range(n_refs):
        ref_id = f"ref{i:02d}"
        ref = moving_texture(width, height, frames, rng)
        write_raw_video(ref, out_dir / f"{ref_id}.y", pix_fmt)
        references.append({"id": ref_id, "file": f"{ref_id}.y"})
        for j, sigma in enumerate(sigmas):
            dist_id = f"{ref_id}_n{j}"
            write_raw_video(add_noise(ref, sigma, rng), out_dir / f"{dist_id}.y", pix_fmt)
            distorted.append({"id": dist_id, "reference_id": ref_id, "file": f"{dist_id}.y",
                              "score": float(sigma), "distortion": "gaussian"})

    manifest = {
        "name": f"synthetic-noise-{n_refs}x{len(sigmas)}",
        "score_polarity": ScorePolarity.LOWER_IS_BETTER.value,
        "references": references,
        "distorted": distorted,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    logger.info(f"🧪 合成数据集已生成: {path} ({n_refs} 个参考视频 × {len(sigmas)} 个噪声等级)")
    return path


def synthetic_clip_pairs(count: int, frames: int, window: int, seed: int = 0) -> List[ClipPair]:
    """count 个独立纹理的片段对，噪声由弱到强，标签 1（最好）到 0 线性分布"""
    rng = np.random.default_rng(seed)
    sigmas = np.linspace(5.0, 60.0, count)
    labels = np.linspace(1.0, 0.0, count) if count > 1 else np.array([0.5])
    clips = []
    for i in range(count):
        ref = moving_texture(window, window, frames, rng)
        dist = add_noise(ref, float(sigmas[i]), rng)
        clips.append(make_clip(ref, dist, 0, 0, 0, frames, window, float(labels[i]), f"clip{i}"))
    return clips
