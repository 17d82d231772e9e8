"""
Core - 共享领域类型、异常、配置与输出格式

包含：
- errors: 异常层次与退出码
- label_models: 标签数据模型
- setups: 训练设置与状态枚举
- config: 配置管理（依赖 schemas，按需从 src.core.config 导入）
- output_formatter: 报告格式化
"""

from .errors import SoftSedError, UsageError, DataError, NumericError, LabelParseError

from .label_models import (
    NO_LABEL,
    ClassVocabulary,
    HardLabelEvent,
    HardLabelEvents,
    SoftLabelTrack,
    ThresholdedActivity,
    Assignment,
    WeakAnnotationSet,
)

from .setups import Head, LossKind, TrainingSetup, ThresholdMethod, RunStatus

from .output_formatter import ReportFormatter


__all__ = [
    # errors
    'SoftSedError',
    'UsageError',
    'DataError',
    'NumericError',
    'LabelParseError',
    # label_models
    'NO_LABEL',
    'ClassVocabulary',
    'HardLabelEvent',
    'HardLabelEvents',
    'SoftLabelTrack',
    'ThresholdedActivity',
    'Assignment',
    'WeakAnnotationSet',
    # setups
    'Head',
    'LossKind',
    'TrainingSetup',
    'ThresholdMethod',
    'RunStatus',
    # output_formatter
    'ReportFormatter',
]
