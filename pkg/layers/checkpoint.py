"""
参数检查点 - 扁平二进制容器

布局（全部小端）：
    magic    8 字节  b"C3DVQACK"
    version  uint32  当前为 1
    meta_len uint32  随后 JSON 元数据的字节数（UTF-8，键排序）
    meta     bytes
    count    uint32  参数条目数
    每个条目：
        name_len uint16, name (UTF-8)
        ndim     uint8,  dims (uint32 × ndim)
        data     float32 × ∏dims
"""
import json
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from config.logging_config import get_logger
from models.errors import CheckpointError

logger = get_logger(__name__)

MAGIC = b"C3DVQACK"
VERSION = 1


def encode_checkpoint(arrays: Sequence[Tuple[str, np.ndarray]], metadata: Dict[str, Any]) -> bytes:
    """把有序参数列表与元数据编码为字节串"""
    meta = json.dumps(metadata, sort_keys=True, ensure_ascii=False).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta, struct.pack("<I", len(arrays))]
    for name, array in arrays:
        encoded_name = name.encode("utf-8")
        array = np.asarray(array)
        parts.append(struct.pack("<H", len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_checkpoint(payload: bytes) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, Any]]:
    """解析字节串，返回 (有序参数字典, 元数据)"""
    view = memoryview(payload)
    offset = 0

    def take(size: int) -> memoryview:
        nonlocal offset
        if offset + size > len(view):
            raise CheckpointError("检查点文件被截断")
        chunk = view[offset:offset + size]
        offset += size
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise CheckpointError("不是有效的检查点文件（magic 不匹配）")
    version, meta_len = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"不支持的检查点版本: {version}")
    try:
        metadata = json.loads(bytes(take(meta_len)).decode("utf-8"))
    except ValueError as e:
        raise CheckpointError(f"检查点元数据无法解析: {e}") from e

    (count,) = struct.unpack("<I", take(4))
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(take(4 * size), dtype="<f4").astype(np.float32)
        arrays[name] = data.reshape(shape)
    if offset != len(view):
        raise CheckpointError(f"检查点尾部存在 {len(view) - offset} 字节多余数据")
    return arrays, metadata


def save_checkpoint(path: Union[str, Path], arrays: Sequence[Tuple[str, np.ndarray]],
                    metadata: Dict[str, Any]) -> Path:
    """写入检查点文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(arrays, metadata))
    logger.info(f"💾 检查点已保存: {path} ({len(arrays)} 个参数)")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, Any]]:
    """读取检查点文件"""
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"无法读取检查点 {path}: {e}") from e
    arrays, metadata = decode_checkpoint(payload)
    logger.info(f"📂 检查点已加载: {path} ({len(arrays)} 个参数)")
    return arrays, metadata
