"""
Features - log-mel 特征提取模块
"""

from .mel import (
    FeatureMatrix,
    SegmentFeatures,
    hz_to_mel,
    mel_to_hz,
    mel_band_edges,
    mel_filterbank,
    mel_energies,
    segment_pool,
    frame_count,
)
from .feature_io import read_wav, write_features, read_features

__all__ = [
    'FeatureMatrix',
    'SegmentFeatures',
    'hz_to_mel',
    'mel_to_hz',
    'mel_band_edges',
    'mel_filterbank',
    'mel_energies',
    'segment_pool',
    'frame_count',
    'read_wav',
    'write_features',
    'read_features',
]
