"""
测试 log-mel 特征提取、片段池化与特征文件
"""

import numpy as np
import pytest
import soundfile as sf
from pydantic import ValidationError

from src.core.errors import DataError, UsageError
from src.features.feature_io import read_features, read_wav, write_features
from src.features.mel import FeatureMatrix, frame_count, mel_band_edges, mel_energies, mel_filterbank, segment_pool
from src.schemas.config_schemas import FeatureConfig


def test_frame_count_for_ten_seconds_at_44k():
    assert frame_count(441000, 2048, 882) == 498
    features = mel_energies(np.zeros(441000), 44100)
    assert features.values.shape == (498, 64)
    assert features.hop_samples == 882


def test_silence_hits_the_log_floor():
    features = mel_energies(np.zeros(44100), 44100)
    assert np.all(features.values == np.log(1e-10))


def test_sine_peaks_in_the_analytic_band():
    sr = 44100
    t = np.arange(2 * sr) / sr
    features = mel_energies(np.sin(2 * np.pi * 1000.0 * t), sr)
    centers = mel_band_edges(64, 50.0, 14000.0)[1:-1]
    expected = int(np.argmin(np.abs(centers - 1000.0)))
    assert set(np.argmax(features.values, axis=1).tolist()) == {expected}


def test_filterbank_shape_and_peaks():
    bank = mel_filterbank(16000, n_fft=512, n_mels=20, f_lo=50.0, f_hi=8000.0)
    assert bank.shape == (20, 257)
    assert bank.min() >= 0.0
    assert bank.max() <= 1.0
    with pytest.raises(UsageError):
        mel_filterbank(16000, f_hi=9000.0)


def test_filterbank_has_no_spectral_holes():
    """第一个和最后一个中心频率之间的每个 FFT bin 都有正的总权重"""
    for sample_rate, n_fft, n_mels, f_lo, f_hi in [(44100, 2048, 64, 50.0, 14000.0), (8000, 256, 16, 50.0, 3800.0)]:
        bank = mel_filterbank(sample_rate, n_fft, n_mels, f_lo, f_hi)
        centers = mel_band_edges(n_mels, f_lo, f_hi)[1:-1]
        freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
        inside = (freqs >= centers[0]) & (freqs <= centers[-1])
        assert inside.sum() > n_mels
        assert np.all(bank.sum(axis=0)[inside] > 0.0)


def test_doubling_the_amplitude_adds_log_four(small_features):
    signal = np.random.default_rng(3).normal(scale=0.3, size=16000)
    base = mel_energies(signal, 8000, small_features).values
    louder = mel_energies(2.0 * signal, 8000, small_features).values
    above_floor = base > np.log(1e-3)
    assert above_floor.mean() > 0.99
    assert np.allclose((louder - base)[above_floor], np.log(4.0), atol=1e-6)


def test_feature_config_rejects_band_above_nyquist():
    with pytest.raises(ValidationError):
        FeatureConfig(sample_rate=16000, f_max=14000.0)


def test_signal_errors(small_features):
    with pytest.raises(DataError):
        mel_energies(np.zeros(100), 8000, small_features)
    with pytest.raises(DataError):
        mel_energies(np.zeros((8000, 2)), 8000, small_features)
    signal = np.zeros(8000)
    signal[10] = np.nan
    with pytest.raises(DataError):
        mel_energies(signal, 8000, small_features)


def test_segment_pool_means_and_stds():
    values = np.array([[0.0], [2.0], [4.0], [4.0], [1.0], [3.0]])
    features = FeatureMatrix(values, sample_rate=10, hop_samples=5, n_fft=5, duration_seconds=3.0)
    pooled = segment_pool(features)
    assert pooled.values.tolist() == [[1.0, 1.0], [4.0, 0.0], [2.0, 1.0]]
    assert segment_pool(features, n_segments=2).n_segments == 2


def test_segment_pool_errors():
    short = FeatureMatrix(np.zeros((2, 1)), sample_rate=10, hop_samples=2, n_fft=2, duration_seconds=0.5)
    with pytest.raises(DataError):
        segment_pool(short)
    sparse = FeatureMatrix(np.zeros((2, 1)), sample_rate=10, hop_samples=20, n_fft=2, duration_seconds=3.0)
    with pytest.raises(DataError, match='no frames'):
        segment_pool(sparse)


def test_pooled_segments_from_audio(small_features):
    rng = np.random.default_rng(0)
    features = mel_energies(rng.normal(size=8000 * 3), 8000, small_features, recording='noise')
    segments = segment_pool(features)
    assert segments.n_segments == 3
    assert segments.values.shape == (3, 32)
    assert segments.recording == 'noise'


def test_feature_file_round_trip(tmp_path):
    values = np.arange(12, dtype=np.float32).reshape(4, 3) / 4.0
    path = tmp_path / 'rec.feat'
    write_features(path, FeatureMatrix(values, sample_rate=8000, hop_samples=160, n_fft=256))
    loaded = read_features(path, 8000, n_fft=256)
    assert loaded.recording == 'rec'
    assert loaded.hop_samples == 160
    assert np.array_equal(loaded.values, values.astype(np.float64))


def test_feature_file_errors(tmp_path):
    path = tmp_path / 'rec.feat'
    write_features(path, FeatureMatrix(np.zeros((4, 3)), sample_rate=8000, hop_samples=160, n_fft=256))
    blob = path.read_bytes()
    path.write_bytes(b'XXXX' + blob[4:])
    with pytest.raises(DataError, match='magic'):
        read_features(path, 8000)
    path.write_bytes(blob[:-4])
    with pytest.raises(DataError):
        read_features(path, 8000)
    path.write_bytes(blob[:6])
    with pytest.raises(DataError, match='truncated'):
        read_features(path, 8000)
    with pytest.raises(DataError, match='cannot read'):
        read_features(tmp_path / 'missing.feat', 8000)


def test_read_wav(tmp_path):
    mono = tmp_path / 'mono.wav'
    sf.write(str(mono), np.linspace(-0.5, 0.5, 800), 8000, subtype='PCM_16')
    samples = read_wav(mono, 8000)
    assert samples.shape == (800,)
    assert abs(samples[0] + 0.5) < 1e-3

    with pytest.raises(DataError, match='sample rate'):
        read_wav(mono, 16000)

    stereo = tmp_path / 'stereo.wav'
    sf.write(str(stereo), np.zeros((800, 2)), 8000)
    with pytest.raises(DataError, match='single channel'):
        read_wav(stereo, 8000)

    garbage = tmp_path / 'garbage.wav'
    garbage.write_bytes(b'not audio at all')
    with pytest.raises(DataError):
        read_wav(garbage, 8000)
