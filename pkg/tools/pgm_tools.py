"""
PGM 图像工具 - 特征图归一化与二进制 PGM（P5, maxval 255）写出
"""
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from models.errors import C3DVQAError


def normalize_map(fmap: np.ndarray) -> np.ndarray:
    """min-max 归一化到 [0, 255]；常数图输出全0"""
    fmap = np.asarray(fmap, dtype=np.float64)
    if fmap.ndim == 3:
        fmap = fmap.mean(axis=0)
    if fmap.ndim != 2:
        raise ValueError(f"特征图必须是二维或 (通道, 高, 宽)，当前 {fmap.shape}")
    low, high = float(fmap.min()), float(fmap.max())
    if high - low <= 0:
        return np.zeros(fmap.shape, dtype=np.uint8)
    return np.round((fmap - low) / (high - low) * 255.0).astype(np.uint8)


def write_pgm(image: np.ndarray, path: Union[str, Path]) -> Path:
    """写出 8 位灰度 PGM"""
    path = Path(path)
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError(f"PGM 需要 uint8 二维数组，当前 {image.dtype} {image.shape}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(image).save(path, format="PPM")
    except OSError as e:
        raise C3DVQAError(f"无法写出图像 {path}: {e}") from e
    return path


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as img:
        return np.array(img.convert("L"))
