"""
Thresholds - 按类别的决策阈值

类别阈值取训练集软标签的截尾中程数（默认两端各去掉 10%），只使用非零值。
没有任何正值的类别回退到 0.5；只有 {0, 1} 取值的类别也取 0.5
（即二值参考标注的中程数）。
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Set, Union

import numpy as np

from ..core.errors import DataError, LabelParseError, UsageError
from ..core.label_models import SoftLabelTrack
from ..core.setups import ThresholdMethod
from ..labels.labelio import iter_records, read_text

logger = logging.getLogger(__name__)

FALLBACK_THRESHOLD = 0.5
# 阈值必须严格位于 (0, 1) 内
_EDGE = 1e-6


@dataclass
class ThresholdTable:
    """类别 -> τ_c"""
    thresholds: Dict[str, float]
    method: ThresholdMethod = ThresholdMethod.TRIMMED_MIDRANGE
    fallback: Set[str] = field(default_factory=set)

    def __post_init__(self):
        self.method = ThresholdMethod(self.method)
        for label, value in self.thresholds.items():
            if not 0.0 < value < 1.0:
                raise UsageError(f"threshold for '{label}' must lie in (0, 1), got {value}")

    def __getitem__(self, label: str) -> float:
        return self.thresholds[label]


def trimmed_midrange(values: Iterable[float], trim: float = 0.10) -> float:
    """
    截尾中程数: 排序后两端各去掉 floor(trim·n) 个值，返回剩余部分 (min + max) / 2

    Raises:
        DataError: 输入为空或截尾后为空
    """
    ordered = np.sort(np.asarray(list(values), dtype=np.float64))
    n = ordered.shape[0]
    if n == 0:
        raise DataError("trimmed midrange of an empty list")
    if not 0.0 <= trim < 0.5:
        raise UsageError(f"trim fraction must lie in [0, 0.5), got {trim}")
    cut = int(math.floor(trim * n + 1e-9))
    remainder = ordered[cut:n - cut]
    if remainder.shape[0] == 0:
        raise DataError(f"nothing left after trimming {cut} values from each end of {n}")
    return float((remainder[0] + remainder[-1]) / 2.0)


def fixed_thresholds(classes: Sequence[str], value: float = FALLBACK_THRESHOLD) -> ThresholdTable:
    return ThresholdTable({c: float(value) for c in classes}, ThresholdMethod.FIXED)


def class_thresholds(
    tracks: Sequence[SoftLabelTrack],
    classes: Sequence[str],
    trim: float = 0.10,
    positives_only: bool = True,
) -> ThresholdTable:
    """
    由训练集软标签计算每个类别的阈值

    Args:
        tracks: 训练集软标签轨迹
        classes: 类别列表
        trim: 每端截去的比例
        positives_only: 只使用非零软标签

    Returns:
        ThresholdTable；回退到 0.5 的类别记录在 fallback 中
    """
    thresholds: Dict[str, float] = {}
    fallback: Set[str] = set()
    for label in classes:
        pooled: List[np.ndarray] = [t.column(label) for t in tracks if label in t.classes]
        values = np.concatenate(pooled) if pooled else np.zeros(0)
        if positives_only:
            values = values[values > 0.0]
        if values.size == 0 or not np.any(values > 0.0):
            logger.warning(f"Class '{label}' has no positive soft labels; using threshold {FALLBACK_THRESHOLD}")
            thresholds[label] = FALLBACK_THRESHOLD
            fallback.add(label)
            continue
        if positives_only and np.all(values >= 1.0):
            # 只有二值标签: 参考取值 {0, 1} 的中程数
            thresholds[label] = FALLBACK_THRESHOLD
            continue
        tau = trimmed_midrange(values, trim)
        thresholds[label] = float(np.clip(tau, _EDGE, 1.0 - _EDGE))
        logger.debug(f"Threshold for '{label}': {thresholds[label]:.6f} from {values.size} values")
    return ThresholdTable(thresholds, ThresholdMethod.TRIMMED_MIDRANGE, fallback)


def serialize_thresholds(table: ThresholdTable) -> str:
    lines = [f"# method={table.method.value}\n"]
    lines.extend(f"{label}\t{table.thresholds[label]:.6f}\n" for label in sorted(table.thresholds))
    return ''.join(lines)


def parse_thresholds(text: str) -> ThresholdTable:
    """
    Raises:
        LabelParseError: 字段数错误或数值不在 (0, 1) 内
    """
    method = ThresholdMethod.TRIMMED_MIDRANGE
    for line in text.splitlines():
        if line.startswith('# method='):
            method = ThresholdMethod(line.split('=', 1)[1].strip())
    thresholds = {}
    for line_number, fields in iter_records(text):
        if len(fields) != 2:
            raise LabelParseError(f"expected 2 fields (class, threshold), got {len(fields)}", line_number)
        try:
            value = float(fields[1])
        except ValueError:
            raise LabelParseError(f"threshold '{fields[1]}' is not a number", line_number) from None
        if not 0.0 < value < 1.0:
            raise LabelParseError(f"threshold {value} outside (0, 1)", line_number)
        thresholds[fields[0]] = value
    return ThresholdTable(thresholds, method)


def read_thresholds(path: Union[str, Path]) -> ThresholdTable:
    return parse_thresholds(read_text(path, 'threshold'))
