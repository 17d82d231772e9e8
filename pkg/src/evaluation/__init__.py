"""
Evaluation - 片段级指标与类别阈值
"""

from .metrics import (
    SegmentEvalReport,
    segment_eval,
    segment_eval_many,
    concatenate_activities,
    kld,
    report_lines,
    report_text,
)
from .thresholds import (
    ThresholdTable,
    trimmed_midrange,
    class_thresholds,
    fixed_thresholds,
    serialize_thresholds,
    parse_thresholds,
    read_thresholds,
)

__all__ = [
    'SegmentEvalReport',
    'segment_eval',
    'segment_eval_many',
    'concatenate_activities',
    'kld',
    'report_lines',
    'report_text',
    'ThresholdTable',
    'trimmed_midrange',
    'class_thresholds',
    'fixed_thresholds',
    'serialize_thresholds',
    'parse_thresholds',
    'read_thresholds',
]
