"""
Labels - 标签文件格式、词表与弱标注编解码
"""

from .labelio import (
    parse_hard_labels,
    parse_soft_labels,
    serialize_hard,
    serialize_soft,
    read_hard_labels,
    read_soft_labels,
    read_duration_hint,
    read_header,
)
from .vocabulary import (
    DEFAULT_VOCABULARIES,
    DATASET_STATISTICS,
    get_vocabulary,
    load_vocabularies,
    merged_vocabulary,
    count_instances,
    total_instances,
)
from .annotation_io import serialize_annotations, parse_annotations, read_annotations

__all__ = [
    'parse_hard_labels',
    'parse_soft_labels',
    'serialize_hard',
    'serialize_soft',
    'read_hard_labels',
    'read_soft_labels',
    'read_duration_hint',
    'read_header',
    'DEFAULT_VOCABULARIES',
    'DATASET_STATISTICS',
    'get_vocabulary',
    'load_vocabularies',
    'merged_vocabulary',
    'count_instances',
    'total_instances',
    'serialize_annotations',
    'parse_annotations',
    'read_annotations',
]
