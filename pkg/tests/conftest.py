"""
共享测试夹具
"""

import os

import numpy as np
import pytest

from src.core.config import Config
from src.core.label_models import ClassVocabulary
from src.core.output_formatter import ReportFormatter
from src.labels.vocabulary import get_vocabulary
from src.schemas.config_schemas import FeatureConfig


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    """每个测试使用新的配置单例，且不受外部 SOFTSED_* 环境变量影响"""
    for key in list(os.environ):
        if key.startswith('SOFTSED_') and key != 'SOFTSED_MAESTRO_DIR':
            monkeypatch.delenv(key, raising=False)
    Config.reset()
    ReportFormatter.PRINT_ENABLED = False
    yield
    Config.reset()


@pytest.fixture
def vocabulary():
    return ClassVocabulary('test', ('alarm', 'bird', 'car'))


@pytest.fixture
def residential():
    return get_vocabulary('residential_area')


@pytest.fixture
def small_features():
    """小采样率的特征配置，测试中合成特征更快"""
    return FeatureConfig(sample_rate=8000, n_fft=256, n_mels=16, f_min=50.0, f_max=3800.0, hop_seconds=0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
