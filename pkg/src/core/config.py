"""
配置管理模块 - 统一管理流水线配置

支持多种配置方式（优先级从低到高）:
1. 内置默认值（见 src/schemas/config_schemas.py）
2. YAML 配置文件
3. .env 文件中的 SOFTSED_* 项
4. SOFTSED_* 环境变量
5. 命令行参数

嵌套字段用双下划线表示，例如 SOFTSED_TRAINING__EPOCHS=30。
"""

import copy
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import dotenv_values
from pydantic import ValidationError

from ..schemas.config_schemas import PipelineConfig
from .errors import UsageError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'SOFTSED_'


class Config:
    """配置管理类 - 单例模式"""

    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._data: Dict[str, Any] = {}
            self._config_path: Optional[Path] = None
            self._pipeline: Optional[PipelineConfig] = None
            self._initialized = True

    @classmethod
    def reset(cls) -> None:
        """丢弃单例（测试之间使用）"""
        cls._instance = None
        cls._initialized = False

    def load_from_file(self, config_path: str) -> 'Config':
        """从 YAML 文件加载配置"""
        path = Path(config_path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise UsageError(f"config file {path} is not valid YAML: {e}") from e
        except (OSError, UnicodeDecodeError) as e:
            raise UsageError(f"cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must contain a mapping")
        self._merge(data)
        self._config_path = path
        return self

    def load_from_dotenv(self, dotenv_path: str = '.env') -> 'Config':
        """从 .env 文件加载 SOFTSED_* 配置"""
        env_file = Path(dotenv_path)
        if not env_file.exists():
            return self
        self._apply_env(dotenv_values(env_file))
        return self

    def load_from_env(self) -> 'Config':
        """从环境变量加载 SOFTSED_* 配置"""
        self._apply_env(os.environ)
        return self

    def set_override(self, dotted_key: str, value: Any) -> 'Config':
        """
        手动覆盖单个配置项

        Args:
            dotted_key: 点分路径，例如 'training.epochs'
            value: 新值（None 表示不覆盖）
        """
        if value is None:
            return self
        node = self._data
        parts = dotted_key.split('.')
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        self._pipeline = None
        return self

    @property
    def config_path(self) -> Optional[Path]:
        """获取配置文件路径"""
        return self._config_path

    @property
    def pipeline(self) -> PipelineConfig:
        """获取校验后的流水线配置"""
        if self._pipeline is None:
            self._pipeline = self.validate()
        return self._pipeline

    @property
    def seed(self) -> int:
        return self.pipeline.seed

    def validate(self) -> PipelineConfig:
        """
        校验配置

        Raises:
            UsageError: 配置不符合模型约束
        """
        try:
            return PipelineConfig.model_validate(self._data)
        except ValidationError as e:
            first = e.errors()[0]
            location = '.'.join(str(p) for p in first.get('loc', ()))
            raise UsageError(f"invalid config at '{location}': {first.get('msg')}", details=str(e)) from e

    def config_hash(self) -> str:
        """规范化配置的 SHA-256 前 16 位"""
        return config_hash(self.pipeline)

    def _merge(self, data: Mapping[str, Any]) -> None:
        _deep_merge(self._data, data)
        self._pipeline = None

    def _apply_env(self, env: Mapping[str, Optional[str]]) -> None:
        for key in sorted(env):
            raw = env[key]
            if not key.startswith(ENV_PREFIX) or raw is None:
                continue
            name = key[len(ENV_PREFIX):].lower()
            if name.split('__', 1)[0] not in PipelineConfig.model_fields:
                logger.debug(f"Ignoring environment variable {key}: not a configuration key")
                continue
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError:
                value = raw
            self.set_override(name.replace('__', '.'), value)


def _deep_merge(target: Dict[str, Any], source: Mapping[str, Any]) -> None:
    for key, value in source.items():
        if isinstance(value, Mapping) and isinstance(target.get(key), dict):
            _deep_merge(target[key], value)
        else:
            target[key] = copy.deepcopy(value)


def config_hash(pipeline: PipelineConfig) -> str:
    """规范化配置的 SHA-256 前 16 位"""
    canonical = json.dumps(pipeline.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


# ============================================================================
# 便捷函数
# ============================================================================

def get_config() -> Config:
    """获取配置实例（单例）"""
    return Config()


def setup_config(
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    use_dotenv: bool = True,
    use_env: bool = True,
) -> Config:
    """
    设置配置并返回配置实例

    Args:
        config_path: YAML 配置文件路径
        overrides: 点分路径 -> 值，优先级最高（命令行参数）
        use_dotenv: 是否从 .env 文件加载
        use_env: 是否从环境变量加载

    Returns:
        Config 实例
    """
    config = get_config()

    if config_path:
        config.load_from_file(config_path)
    if use_dotenv:
        config.load_from_dotenv()
    if use_env:
        config.load_from_env()
    for key, value in (overrides or {}).items():
        config.set_override(key, value)

    pipeline = config.pipeline
    logger.info(f"Configuration loaded: seed={pipeline.seed} hash={config.config_hash()}")
    return config
