"""
Feature IO - WAV 读取与特征二进制文件

特征文件格式:
    16 字节头: magic(4s) | n_frames(uint32) | n_bands(uint32) | hop_ms(float32)
    之后为小端 float32，按行优先排列
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf

from ..core.errors import DataError
from .mel import FeatureMatrix

FEATURE_MAGIC = b'SSFT'
_HEADER = struct.Struct('<4sIIf')


def read_wav(path: Union[str, Path], expected_rate: int) -> np.ndarray:
    """
    读取单声道 WAV（16 位 PCM 或浮点）

    Raises:
        DataError: 多声道或采样率与配置不一致（不做重采样）
    """
    try:
        samples, sample_rate = sf.read(str(path), dtype='float64', always_2d=True)
    except (RuntimeError, OSError) as e:
        raise DataError(f"cannot read audio file {path}: {e}") from e
    if samples.shape[1] != 1:
        raise DataError(f"{path}: expected a single channel, got {samples.shape[1]}")
    if sample_rate != expected_rate:
        raise DataError(f"{path}: sample rate {sample_rate} differs from configured {expected_rate}")
    return samples[:, 0]


def write_features(path: Union[str, Path], features: FeatureMatrix) -> None:
    """写出特征二进制文件"""
    hop_ms = 1000.0 * features.hop_samples / features.sample_rate
    header = _HEADER.pack(FEATURE_MAGIC, features.n_frames, features.n_bands, hop_ms)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(features.values.astype('<f4').tobytes(order='C'))


def read_features(
    path: Union[str, Path],
    sample_rate: int,
    n_fft: int = 2048,
) -> FeatureMatrix:
    """
    读取特征二进制文件

    Args:
        path: 文件路径
        sample_rate: 原始音频采样率（文件头只记录帧移毫秒数）
        n_fft: 窗长

    Raises:
        DataError: magic 不匹配或数据长度与文件头不符
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read feature file {path}: {e.strerror or e}") from e
    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated feature header")
    magic, n_frames, n_bands, hop_ms = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise DataError(f"{path}: bad feature file magic {magic!r}")
    expected = n_frames * n_bands * 4
    if len(blob) - _HEADER.size != expected:
        raise DataError(f"{path}: expected {expected} bytes of feature data, got {len(blob) - _HEADER.size}")
    values = np.frombuffer(blob, dtype='<f4', offset=_HEADER.size).reshape(n_frames, n_bands)
    return FeatureMatrix(
        values=values.astype(np.float64),
        sample_rate=sample_rate,
        hop_samples=int(round(hop_ms * sample_rate / 1000.0)),
        n_fft=n_fft,
        recording=path.stem,
    )
