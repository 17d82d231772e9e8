"""
Aggregate - 由重叠窗口的弱标注重建每秒意见并计算软标签

软标签（能力加权均值）:
    a_t = Σ_j θ_j · v_j / Σ_j θ_j

其中求和遍历覆盖片段 t 的全部 (标注者, 窗口) 意见。同一标注者的多个窗口
默认算作多条意见；dedup 模式下先对同一标注者的投票取均值再加权。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DataError, UsageError
from ..core.label_models import (
    ClassVocabulary,
    HardLabelEvent,
    HardLabelEvents,
    SoftLabelTrack,
    ThresholdedActivity,
    WeakAnnotationSet,
)
from .competence import CompetenceTable

logger = logging.getLogger(__name__)


class SoftLabel(NamedTuple):
    value: float
    covered: bool


@dataclass(eq=False)
class OpinionMatrix:
    """
    每个 (片段, 类别) 的意见集合

    第 n 条意见属于片段 segment[n]、标注者 annotators[annotator_index[n]]，
    对各类别的投票为 values[n]（dedup 模式下可为 [0, 1] 内的均值）。
    """
    recording: str
    duration: int
    classes: Tuple[str, ...]
    annotators: List[str]
    segment: np.ndarray
    annotator_index: np.ndarray
    values: np.ndarray

    @property
    def n_opinions(self) -> int:
        return int(self.segment.shape[0])

    def counts(self) -> np.ndarray:
        """每个片段的意见数（各类别相同）"""
        return np.bincount(self.segment, minlength=self.duration)[:self.duration]

    def opinions(self, t: int, label: str) -> List[Tuple[str, float]]:
        """片段 t、类别 label 的 (annotator, v) 列表"""
        c = self.classes.index(label)
        rows = np.flatnonzero(self.segment == t)
        return [(self.annotators[self.annotator_index[n]], float(self.values[n, c])) for n in rows]


def build_opinions(
    annotations: WeakAnnotationSet,
    vocabulary: ClassVocabulary,
    duration: Optional[int] = None,
    dedup: bool = False,
) -> OpinionMatrix:
    """
    将每个 (标注者, 窗口) 分配展开到它覆盖的每个 1 秒片段

    Args:
        annotations: 弱标注
        vocabulary: 场景词表（决定列顺序）
        duration: 录音时长，默认取标注声明的时长或覆盖范围
        dedup: 同一标注者覆盖同一片段的多条意见合并为均值

    Raises:
        DataError: 窗口超出 duration 或出现词表外的类别
    """
    if duration is None:
        duration = annotations.duration if annotations.duration is not None else annotations.span()
    if annotations.span() > duration:
        raise DataError(
            f"annotations of '{annotations.recording}' extend to {annotations.span()} s beyond duration {duration}"
        )
    classes = vocabulary.classes
    annotators = annotations.annotators()
    column = {a: j for j, a in enumerate(annotators)}
    window = annotations.window

    n_assign = len(annotations.assignments)
    starts = np.empty(n_assign, dtype=np.int64)
    owners = np.empty(n_assign, dtype=np.int64)
    votes = np.zeros((n_assign, len(classes)))
    for n, a in enumerate(annotations.assignments):
        unknown = set(a.selected) - set(classes)
        if unknown:
            raise DataError(f"labels {sorted(unknown)} not in vocabulary of scene '{vocabulary.scene}'")
        starts[n] = a.start
        owners[n] = column[a.annotator]
        votes[n] = [label in a.selected for label in classes]

    segment = (starts[:, np.newaxis] + np.arange(window)).ravel()
    annotator_index = np.repeat(owners, window)
    values = np.repeat(votes, window, axis=0)

    if dedup and segment.size:
        keys = segment * len(annotators) + annotator_index
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        totals = np.zeros((unique_keys.shape[0], len(classes)))
        np.add.at(totals, inverse, values)
        counts = np.bincount(inverse).astype(np.float64)
        values = totals / counts[:, np.newaxis]
        segment = unique_keys // len(annotators)
        annotator_index = unique_keys % len(annotators)

    return OpinionMatrix(
        recording=annotations.recording,
        duration=int(duration),
        classes=classes,
        annotators=annotators,
        segment=segment.astype(np.int64),
        annotator_index=annotator_index.astype(np.int64),
        values=values,
    )


def soft_label(opinions: Sequence[Tuple[str, float]], table: CompetenceTable) -> SoftLabel:
    """
    单个 (片段, 类别) 的软标签

    没有意见时返回 0 并标记为未覆盖。
    """
    if not opinions:
        return SoftLabel(0.0, False)
    weights = np.array([table.weight(annotator) for annotator, _ in opinions])
    votes = np.array([v for _, v in opinions], dtype=np.float64)
    value = float(np.dot(weights, votes) / weights.sum())
    return SoftLabel(min(max(value, 0.0), 1.0), True)


def aggregate_opinions(opinions: OpinionMatrix, table: CompetenceTable) -> SoftLabelTrack:
    """对每个 (片段, 类别) 计算加权均值；未覆盖的片段为 0"""
    weights = np.array([table.weight(a) for a in opinions.annotators])[opinions.annotator_index]
    denominator = np.bincount(opinions.segment, weights, minlength=opinions.duration)
    numerator = np.zeros((opinions.duration, len(opinions.classes)))
    np.add.at(numerator, opinions.segment, weights[:, np.newaxis] * opinions.values)

    covered = denominator > 0
    values = np.zeros_like(numerator)
    values[covered] = numerator[covered] / denominator[covered, np.newaxis]
    uncovered = int(np.count_nonzero(~covered))
    if uncovered and opinions.n_opinions:
        logger.warning(f"{uncovered} segments of '{opinions.recording}' have no annotation coverage")
    return SoftLabelTrack(opinions.recording, opinions.duration, opinions.classes, np.clip(values, 0.0, 1.0))


def aggregate_track(
    annotations: WeakAnnotationSet,
    table: CompetenceTable,
    vocabulary: ClassVocabulary,
    duration: Optional[int] = None,
    dedup: bool = False,
) -> SoftLabelTrack:
    """弱标注 -> 软标签轨迹"""
    opinions = build_opinions(annotations, vocabulary, duration=duration, dedup=dedup)
    return aggregate_opinions(opinions, table)


def uniform_competence(annotators: Iterable[str]) -> CompetenceTable:
    """所有标注者等权，软标签退化为意见中 1 的比例"""
    return CompetenceTable(theta={a: 0.5 for a in annotators}, xi={})


# ============================================================================
# 覆盖报告
# ============================================================================

def coverage_report(opinions: OpinionMatrix) -> List[Tuple[int, str, int]]:
    """(segment, class, n_opinions)，按片段和类别名排序"""
    counts = opinions.counts()
    return [
        (t, label, int(counts[t]))
        for t in range(opinions.duration)
        for label in sorted(opinions.classes)
    ]


def serialize_coverage(report: Sequence[Tuple[int, str, int]]) -> str:
    return ''.join(f"{t}\t{label}\t{n}\n" for t, label, n in report)


# ============================================================================
# 二值化与事件提取
# ============================================================================

def _threshold_vector(classes: Sequence[str], thresholds: Union[float, Mapping[str, float]]) -> np.ndarray:
    if isinstance(thresholds, Mapping):
        missing = [c for c in classes if c not in thresholds]
        if missing:
            raise UsageError(f"no threshold for classes {missing}")
        vector = np.array([thresholds[c] for c in classes], dtype=np.float64)
    else:
        vector = np.full(len(classes), float(thresholds))
    if np.any(~np.isfinite(vector)) or np.any(vector <= 0.0) or np.any(vector >= 1.0):
        raise UsageError(f"thresholds must lie strictly inside (0, 1), got {vector.tolist()}")
    return vector


def binarize(
    track: Union[SoftLabelTrack, np.ndarray],
    thresholds: Union[float, Mapping[str, float]] = 0.5,
    classes: Optional[Sequence[str]] = None,
    recording: str = '',
) -> ThresholdedActivity:
    """
    按类别阈值二值化，a_t >= τ_c 为活动（等于阈值也算活动）

    Raises:
        UsageError: 阈值不在 (0, 1) 内或缺少某类别的阈值
    """
    if isinstance(track, SoftLabelTrack):
        values, classes, recording = track.values, track.classes, track.recording
    else:
        values = np.asarray(track, dtype=np.float64)
        if classes is None:
            raise UsageError("classes are required when binarizing a raw score matrix")
    classes = tuple(classes)
    vector = _threshold_vector(classes, thresholds)
    return ThresholdedActivity(
        recording=recording,
        classes=classes,
        active=values >= vector[np.newaxis, :],
        thresholds={c: float(v) for c, v in zip(classes, vector)},
    )


def events_from_activity(activity: ThresholdedActivity) -> HardLabelEvents:
    """每个类别中连续活动片段的最大游程转为一个事件"""
    events = []
    for c, label in enumerate(activity.classes):
        column = np.concatenate([[False], activity.active[:, c], [False]]).astype(np.int8)
        edges = np.diff(column)
        onsets = np.flatnonzero(edges == 1)
        offsets = np.flatnonzero(edges == -1)
        events.extend(HardLabelEvent(int(on), int(off), label) for on, off in zip(onsets, offsets))
    return HardLabelEvents(recording=activity.recording, events=events).canonical()


def rasterize(
    events: HardLabelEvents,
    classes: Sequence[str],
    duration: Optional[int] = None,
) -> ThresholdedActivity:
    """
    事件列表 -> 片段活动矩阵（events_from_activity 的逆）

    Raises:
        DataError: 事件超出 duration 或标签不在类别列表中
    """
    classes = tuple(classes)
    if duration is None:
        duration = max((e.offset for e in events), default=0)
    column: Dict[str, int] = {c: i for i, c in enumerate(classes)}
    active = np.zeros((duration, len(classes)), dtype=bool)
    for e in events:
        if e.label not in column:
            raise DataError(f"event label '{e.label}' is not a known class")
        if e.offset > duration:
            raise DataError(f"event {e.onset}-{e.offset} '{e.label}' exceeds duration {duration}")
        active[e.onset:e.offset, column[e.label]] = True
    return ThresholdedActivity(events.recording, classes, active)
