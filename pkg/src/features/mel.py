"""
Mel Features - log-mel 能量特征与 1 秒片段池化

固定参数: Hann 窗（周期型）、功率谱、HTK mel 公式、对数下限 1e-10。
帧移 "20 ms" 取 round(0.02 * sample_rate) 个采样点，不做补零，
帧数 = floor((N - n_fft) / hop) + 1。
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.signal import get_window

from ..core.errors import DataError, UsageError
from ..schemas.config_schemas import FeatureConfig

logger = logging.getLogger(__name__)

# 分块计算 STFT，避免长录音一次性展开所有帧
_FRAMES_PER_CHUNK = 1024


@dataclass(eq=False)
class FeatureMatrix:
    """帧级 log-mel 能量 (n_frames × n_bands)"""
    values: np.ndarray
    sample_rate: int
    hop_samples: int
    n_fft: int = 2048
    duration_seconds: Optional[float] = None
    recording: str = ''

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"feature matrix of '{self.recording}' contains non-finite values")
        if self.duration_seconds is None:
            # 原始采样数未知时取能产生该帧数的最长信号
            self.duration_seconds = (self.n_frames * self.hop_samples + self.n_fft - 1) / self.sample_rate

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_bands(self) -> int:
        return int(self.values.shape[1])

    @property
    def hop_seconds(self) -> float:
        return self.hop_samples / self.sample_rate


@dataclass(eq=False)
class SegmentFeatures:
    """每个 1 秒片段的特征向量: 各频带均值 + 各频带总体标准差"""
    values: np.ndarray
    recording: str = ''

    @property
    def n_segments(self) -> int:
        return int(self.values.shape[0])


def hz_to_mel(frequency):
    """HTK 公式"""
    return 2595.0 * np.log10(1.0 + np.asarray(frequency, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_edges(n_mels: int, f_lo: float, f_hi: float) -> np.ndarray:
    """n_mels + 2 个在 mel 刻度上等距的边界频率（Hz）"""
    return mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2))


def mel_filterbank(
    sample_rate: int,
    n_fft: int = 2048,
    n_mels: int = 64,
    f_lo: float = 50.0,
    f_hi: float = 14000.0,
) -> np.ndarray:
    """
    三角形 mel 滤波器组

    Returns:
        形状 (n_mels, n_fft // 2 + 1) 的非负权重矩阵，第 b 行的峰值位于第 b+1 个边界频率

    Raises:
        UsageError: f_hi 超过 Nyquist 频率或 f_lo >= f_hi
    """
    if f_lo < 0 or f_lo >= f_hi:
        raise UsageError(f"invalid mel range: f_lo={f_lo}, f_hi={f_hi}")
    if f_hi > sample_rate / 2:
        raise UsageError(f"f_hi {f_hi} exceeds Nyquist frequency {sample_rate / 2}")
    return _cached_filterbank(int(sample_rate), int(n_fft), int(n_mels), float(f_lo), float(f_hi)).copy()


@lru_cache(maxsize=8)
def _cached_filterbank(sample_rate: int, n_fft: int, n_mels: int, f_lo: float, f_hi: float) -> np.ndarray:
    fft_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    edges = mel_band_edges(n_mels, f_lo, f_hi)
    lower = edges[:-2, np.newaxis]
    center = edges[1:-1, np.newaxis]
    upper = edges[2:, np.newaxis]
    rising = (fft_freqs - lower) / (center - lower)
    falling = (upper - fft_freqs) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def frame_count(n_samples: int, n_fft: int, hop_samples: int) -> int:
    if n_samples < n_fft:
        return 0
    return (n_samples - n_fft) // hop_samples + 1


def mel_energies(
    samples: np.ndarray,
    sample_rate: int,
    config: Optional[FeatureConfig] = None,
    recording: str = '',
) -> FeatureMatrix:
    """
    计算 log-mel 能量

    Args:
        samples: 单声道波形
        sample_rate: 采样率（Hz）
        config: 特征配置，默认使用 FeatureConfig()

    Raises:
        DataError: 信号短于一个窗长或包含非有限值
    """
    config = config or FeatureConfig(sample_rate=sample_rate)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise DataError(f"expected a single-channel signal, got shape {samples.shape}")
    if samples.shape[0] < config.n_fft:
        raise DataError(f"signal of {samples.shape[0]} samples is shorter than the window ({config.n_fft})")
    if not np.all(np.isfinite(samples)):
        raise DataError("signal contains non-finite samples")

    hop = int(round(config.hop_seconds * sample_rate))
    filterbank = mel_filterbank(sample_rate, config.n_fft, config.n_mels, config.f_min, config.f_max)
    window = get_window('hann', config.n_fft, fftbins=True)
    frames = np.lib.stride_tricks.sliding_window_view(samples, config.n_fft)[::hop]

    energies = np.empty((frames.shape[0], config.n_mels))
    for start in range(0, frames.shape[0], _FRAMES_PER_CHUNK):
        chunk = frames[start:start + _FRAMES_PER_CHUNK] * window
        power = np.abs(np.fft.rfft(chunk, n=config.n_fft, axis=1)) ** 2
        energies[start:start + chunk.shape[0]] = power @ filterbank.T

    logger.debug(f"Computed {frames.shape[0]} mel frames for '{recording}'")
    return FeatureMatrix(
        values=np.log(energies + config.log_floor),
        sample_rate=sample_rate,
        hop_samples=hop,
        n_fft=config.n_fft,
        duration_seconds=samples.shape[0] / sample_rate,
        recording=recording,
    )


def segment_pool(features: FeatureMatrix, n_segments: Optional[int] = None) -> SegmentFeatures:
    """
    将帧池化为 1 秒片段特征

    帧 i 归入片段 floor(i * hop / sample_rate)，丢弃末尾不足 1 秒的部分。

    Args:
        features: 帧级特征
        n_segments: 最多保留的片段数（例如与标签时长对齐）

    Raises:
        DataError: 不足 1 秒，或某个片段没有任何帧
    """
    count = int(np.floor(features.duration_seconds + 1e-9))
    if n_segments is not None:
        count = min(count, n_segments)
    if count < 1:
        raise DataError(f"features of '{features.recording}' cover less than one second")

    segment_of = (np.arange(features.n_frames) * features.hop_samples) // features.sample_rate
    bounds = np.searchsorted(segment_of, np.arange(count + 1), side='left')
    pooled = np.empty((count, 2 * features.n_bands))
    for t in range(count):
        rows = features.values[bounds[t]:bounds[t + 1]]
        if rows.shape[0] == 0:
            raise DataError(f"segment {t} of '{features.recording}' has no frames")
        pooled[t, :features.n_bands] = rows.mean(axis=0)
        pooled[t, features.n_bands:] = rows.std(axis=0)
    return SegmentFeatures(values=pooled, recording=features.recording)
