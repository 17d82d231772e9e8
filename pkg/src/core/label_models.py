"""
Label Models - 标签数据模型

定义各模块之间传递的标签结构:
- ClassVocabulary: 场景及其类别词表
- HardLabelEvent / HardLabelEvents: 整秒时间戳的事件列表
- SoftLabelTrack: 每个 1 秒片段 × 类别的软标签 a_t ∈ [0, 1]
- ThresholdedActivity: 二值化后的片段活动矩阵
- Assignment / WeakAnnotationSet: 重叠窗口上的弱标注
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DataError

# 写入标签文件时保留给"未选择任何类别"的占位符
NO_LABEL = '-'


@dataclass(frozen=True)
class ClassVocabulary:
    """场景类别词表"""
    scene: str
    classes: Tuple[str, ...]

    def __post_init__(self):
        classes = tuple(self.classes)
        object.__setattr__(self, 'classes', classes)
        if not classes:
            raise DataError(f"vocabulary for scene '{self.scene}' is empty")
        if len(set(classes)) != len(classes):
            raise DataError(f"vocabulary for scene '{self.scene}' has duplicate class names")
        for name in classes:
            if not name or name != name.strip() or '\t' in name or '\n' in name or name == NO_LABEL:
                raise DataError(f"invalid class name {name!r} in scene '{self.scene}'")

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self) -> Iterator[str]:
        return iter(self.classes)

    def __contains__(self, label: object) -> bool:
        return label in self.classes

    def index(self, label: str) -> int:
        """类别在词表中的列下标"""
        try:
            return self.classes.index(label)
        except ValueError:
            raise DataError(f"unknown label '{label}' for scene '{self.scene}'") from None


@dataclass(frozen=True, order=True)
class HardLabelEvent:
    """单个事件实例，起止时间为整秒"""
    onset: int
    offset: int
    label: str

    def __post_init__(self):
        if self.onset < 0:
            raise DataError(f"event onset must be >= 0, got {self.onset}")
        if self.offset <= self.onset:
            raise DataError(f"event offset {self.offset} must be greater than onset {self.onset}")


@dataclass
class HardLabelEvents:
    """一段录音的硬标签事件列表"""
    recording: str
    events: List[HardLabelEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[HardLabelEvent]:
        return iter(self.events)

    def canonical(self) -> 'HardLabelEvents':
        """按 (onset, label, offset) 排序后的副本"""
        ordered = sorted(self.events, key=lambda e: (e.onset, e.label, e.offset))
        return HardLabelEvents(recording=self.recording, events=ordered)

    def labels(self) -> List[str]:
        return [e.label for e in self.events]


@dataclass(eq=False)
class SoftLabelTrack:
    """
    软标签轨迹

    values[t, c] 为片段 [t, t+1) 中类别 classes[c] 的活动度，未列出的项为 0。
    """
    recording: str
    duration: int
    classes: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.duration < 0:
            raise DataError(f"track duration must be >= 0, got {self.duration}")
        expected = (self.duration, len(self.classes))
        if self.values.shape != expected:
            raise DataError(f"track values shape {self.values.shape} does not match {expected}")
        if self.values.size and (not np.all(np.isfinite(self.values))
                                 or self.values.min() < 0.0 or self.values.max() > 1.0):
            raise DataError(f"soft label values of '{self.recording}' must lie in [0, 1]")

    @classmethod
    def zeros(cls, recording: str, duration: int, classes: Iterable[str]) -> 'SoftLabelTrack':
        classes = tuple(classes)
        return cls(recording, duration, classes, np.zeros((duration, len(classes))))

    @classmethod
    def from_entries(
        cls,
        recording: str,
        duration: int,
        classes: Iterable[str],
        entries: Mapping[Tuple[int, str], float],
    ) -> 'SoftLabelTrack':
        """从 {(t, class): a_t} 映射构建"""
        track = cls.zeros(recording, duration, classes)
        column = {name: i for i, name in enumerate(track.classes)}
        for (t, label), value in entries.items():
            track.values[t, column[label]] = value
        track.__post_init__()
        return track

    def get(self, t: int, label: str) -> float:
        return float(self.values[t, self.classes.index(label)])

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.classes.index(label)]

    def entries(self) -> Dict[Tuple[int, str], float]:
        """非零项 {(t, class): a_t}"""
        rows, cols = np.nonzero(self.values)
        return {(int(t), self.classes[c]): float(self.values[t, c]) for t, c in zip(rows, cols)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SoftLabelTrack):
            return NotImplemented
        return (
            self.recording == other.recording
            and self.duration == other.duration
            and self.classes == other.classes
            and np.array_equal(self.values, other.values)
        )


@dataclass(eq=False)
class ThresholdedActivity:
    """二值活动矩阵 active[t, c]，以及每个类别使用的阈值"""
    recording: str
    classes: Tuple[str, ...]
    active: np.ndarray
    thresholds: Optional[Dict[str, float]] = None

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.active = np.asarray(self.active).astype(bool)
        if self.active.ndim != 2 or self.active.shape[1] != len(self.classes):
            raise DataError(
                f"activity shape {self.active.shape} does not match {len(self.classes)} classes"
            )

    @property
    def duration(self) -> int:
        return int(self.active.shape[0])

    def column(self, label: str) -> np.ndarray:
        return self.active[:, self.classes.index(label)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ThresholdedActivity):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.active, other.active)


@dataclass(frozen=True)
class Assignment:
    """一次 (标注者, 窗口) 分配及其选中的类别"""
    annotator: str
    start: int
    selected: FrozenSet[str] = frozenset()


@dataclass
class WeakAnnotationSet:
    """
    一段录音的弱标注

    每个分配记录标注者在窗口 [start, start + window) 中选中的类别；
    未选中即视为投票 0。同一 (标注者, 窗口) 最多出现一次。
    """
    recording: str
    classes: Tuple[str, ...]
    window: int = 10
    hop: int = 1
    assignments: List[Assignment] = field(default_factory=list)
    duration: Optional[int] = None

    def __post_init__(self):
        self.classes = tuple(self.classes)
        if self.window < 1 or self.hop < 1:
            raise DataError(f"window {self.window} and hop {self.hop} must be >= 1")
        seen = set()
        for a in self.assignments:
            if a.start % self.hop != 0:
                raise DataError(f"window start {a.start} is not a multiple of hop {self.hop}")
            if a.start < 0 or (self.duration is not None and a.start + self.window > self.duration):
                raise DataError(f"window starting at {a.start} exceeds the recording")
            unknown = set(a.selected) - set(self.classes)
            if unknown:
                raise DataError(f"unknown labels {sorted(unknown)} in annotation of '{a.annotator}'")
            key = (a.annotator, a.start)
            if key in seen:
                raise DataError(f"annotator '{a.annotator}' assigned twice to window {a.start}")
            seen.add(key)

    @property
    def votes(self) -> List[Tuple[str, int, str, int]]:
        """显式的正向投票 (annotator, window_start, class, 1)"""
        return [
            (a.annotator, a.start, label, 1)
            for a in self.assignments
            for label in self.classes if label in a.selected
        ]

    def annotators(self) -> List[str]:
        return sorted({a.annotator for a in self.assignments})

    def span(self) -> int:
        """标注覆盖的最晚时刻"""
        return max((a.start + self.window for a in self.assignments), default=0)
