"""
Annotation IO - 弱标注文件的解析与序列化

每行一个正向投票: <annotator>\\t<window_start>\\t<window_end>\\t<label>
标注者看过窗口但未选择任何类别时写一行 label 为 "-" 的记录，
以便解析时仍能还原该 (标注者, 窗口) 分配并物化隐式的 0 票。
"""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Set, Tuple, Union

from ..core.errors import LabelParseError
from ..core.label_models import NO_LABEL, Assignment, ClassVocabulary, WeakAnnotationSet
from .labelio import TextSource, iter_records, parse_whole_seconds, read_duration_hint, read_text


def serialize_annotations(annotations: WeakAnnotationSet) -> str:
    """按 (窗口起点, 标注者, 类别) 排序输出"""
    lines = []
    for a in sorted(annotations.assignments, key=lambda x: (x.start, x.annotator)):
        end = a.start + annotations.window
        labels = sorted(a.selected) or [NO_LABEL]
        lines.extend(f"{a.annotator}\t{a.start}\t{end}\t{label}\n" for label in labels)
    return ''.join(lines)


def parse_annotations(
    source: TextSource,
    vocabulary: ClassVocabulary,
    recording: str = '',
    hop: int = 1,
    duration: Optional[int] = None,
) -> WeakAnnotationSet:
    """
    解析弱标注文件

    Args:
        source: 文本内容、文件对象或行迭代器
        vocabulary: 场景词表
        recording: 录音 ID
        hop: 标注步长 H（秒）
        duration: 录音时长，用于检查窗口越界

    Raises:
        LabelParseError: 字段数错误、窗口长度不一致、起点不在步长网格上或标签未知
    """
    selected: Dict[Tuple[str, int], Set[str]] = OrderedDict()
    window: Optional[int] = None
    for line_number, fields in iter_records(source):
        if len(fields) != 4:
            raise LabelParseError(
                f"expected 4 fields (annotator, start, end, label), got {len(fields)}", line_number
            )
        annotator, label = fields[0], fields[3]
        start = parse_whole_seconds(fields[1], line_number)
        end = parse_whole_seconds(fields[2], line_number)
        if start < 0 or end <= start:
            raise LabelParseError(f"invalid window {start}-{end}", line_number)
        if window is None:
            window = end - start
        elif end - start != window:
            raise LabelParseError(f"window length {end - start} differs from {window}", line_number)
        if start % hop != 0:
            raise LabelParseError(f"window start {start} is not a multiple of hop {hop}", line_number)
        if duration is not None and end > duration:
            raise LabelParseError(f"window {start}-{end} exceeds duration {duration}", line_number)

        labels = selected.setdefault((annotator, start), set())
        if label == NO_LABEL:
            continue
        if label not in vocabulary:
            raise LabelParseError(
                f"unknown label '{label}' for scene '{vocabulary.scene}'", line_number, label=label
            )
        labels.add(label)

    assignments = [
        Assignment(annotator, start, frozenset(labels))
        for (annotator, start), labels in selected.items()
    ]
    return WeakAnnotationSet(
        recording=recording,
        classes=vocabulary.classes,
        window=window or 10,
        hop=hop,
        assignments=assignments,
        duration=duration,
    )


def read_annotations(
    path: Union[str, Path],
    vocabulary: ClassVocabulary,
    hop: int = 1,
) -> WeakAnnotationSet:
    path = Path(path)
    duration = read_duration_hint(path)
    text = read_text(path, 'annotation')
    return parse_annotations(text, vocabulary, recording=path.stem, hop=hop, duration=duration)


def selected_labels(annotations: WeakAnnotationSet) -> Dict[Tuple[str, int], FrozenSet[str]]:
    """{(annotator, window_start): 选中类别}"""
    return {(a.annotator, a.start): a.selected for a in annotations.assignments}
