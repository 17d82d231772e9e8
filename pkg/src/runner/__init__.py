"""
Runner Module - 流水线运行模块

包含阶段运行管理器和各流水线阶段
"""

from .run_manager import RunManager
from .stages import PipelineStages, REPORT_ROWS, resolve_vocabulary, split_recordings

__all__ = ['RunManager', 'PipelineStages', 'REPORT_ROWS', 'resolve_vocabulary', 'split_recordings']
