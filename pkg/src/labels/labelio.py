"""
Label IO - 硬标签 / 软标签文件的解析与序列化

文件格式（UTF-8，行尾 "\\n"，以 '#' 开头的行为注释）:
- 硬标签: <onset>\\t<offset>\\t<label>
- 软标签: <onset>\\t<onset+1>\\t<label>\\t<value>

输入时接受任意连续的制表符/空格作为分隔符；但包含空格的标签
（如 "people talking"）必须使用制表符分隔。输出一律为制表符。
"""

import io
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np

from ..core.errors import DataError, LabelParseError
from ..core.label_models import ClassVocabulary, HardLabelEvent, HardLabelEvents, SoftLabelTrack

_TAB_RUN = re.compile(r'\t+')

TextSource = Union[str, TextIO, Iterable[str]]


def _lines(source: TextSource) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def split_fields(line: str) -> List[str]:
    """按制表符（若存在）或空白拆分一行"""
    line = line.strip()
    if '\t' in line:
        return [part.strip() for part in _TAB_RUN.split(line)]
    return line.split()


def iter_records(source: TextSource) -> Iterable[Tuple[int, List[str]]]:
    """逐行产出 (行号, 字段列表)，跳过空行和注释行"""
    for line_number, line in enumerate(_lines(source), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        yield line_number, split_fields(line)


def parse_whole_seconds(text: str, line_number: int) -> int:
    """解析整秒时间戳，接受 "2" 或 "2.0"，拒绝 "2.5" """
    try:
        value = int(text)
    except ValueError:
        try:
            number = float(text)
        except ValueError:
            raise LabelParseError(f"time '{text}' is not a number", line_number) from None
        if not np.isfinite(number) or number != int(number):
            raise LabelParseError(f"time '{text}' is not a whole second", line_number) from None
        value = int(number)
    return value


def _check_label(label: str, vocabulary: ClassVocabulary, line_number: int) -> None:
    if label not in vocabulary:
        raise LabelParseError(
            f"unknown label '{label}' for scene '{vocabulary.scene}'", line_number, label=label
        )


def parse_hard_labels(
    source: TextSource,
    vocabulary: ClassVocabulary,
    recording: str = '',
) -> HardLabelEvents:
    """
    解析硬标签文件

    Args:
        source: 文本内容、文件对象或行迭代器
        vocabulary: 当前场景词表
        recording: 录音 ID

    Returns:
        按文件顺序排列的事件列表

    Raises:
        LabelParseError: 字段数错误、时间非整数、offset <= onset 或标签未知
    """
    events = []
    for line_number, fields in iter_records(source):
        if len(fields) != 3:
            raise LabelParseError(f"expected 3 fields (onset, offset, label), got {len(fields)}", line_number)
        onset = parse_whole_seconds(fields[0], line_number)
        offset = parse_whole_seconds(fields[1], line_number)
        if onset < 0:
            raise LabelParseError(f"onset {onset} is negative", line_number)
        if offset <= onset:
            raise LabelParseError(f"offset {offset} must be greater than onset {onset}", line_number)
        _check_label(fields[2], vocabulary, line_number)
        events.append(HardLabelEvent(onset, offset, fields[2]))
    return HardLabelEvents(recording=recording, events=events)


def parse_soft_labels(
    source: TextSource,
    vocabulary: ClassVocabulary,
    recording: str = '',
    duration: Optional[int] = None,
) -> SoftLabelTrack:
    """
    解析软标签文件

    Args:
        source: 文本内容、文件对象或行迭代器
        vocabulary: 当前场景词表
        recording: 录音 ID
        duration: 录音时长（秒）；未指定时取最大 offset

    Returns:
        SoftLabelTrack，未列出的 (片段, 类别) 为 0

    Raises:
        LabelParseError: 字段数错误、offset != onset + 1、取值越界或重复项
    """
    entries: Dict[Tuple[int, str], float] = {}
    max_offset = 0
    for line_number, fields in iter_records(source):
        if len(fields) != 4:
            raise LabelParseError(
                f"expected 4 fields (onset, offset, label, value), got {len(fields)}", line_number
            )
        onset = parse_whole_seconds(fields[0], line_number)
        offset = parse_whole_seconds(fields[1], line_number)
        if onset < 0:
            raise LabelParseError(f"onset {onset} is negative", line_number)
        if offset != onset + 1:
            raise LabelParseError(f"soft label segment {onset}-{offset} is not one second long", line_number)
        label = fields[2]
        _check_label(label, vocabulary, line_number)
        try:
            value = float(fields[3])
        except ValueError:
            raise LabelParseError(f"soft value '{fields[3]}' is not a number", line_number) from None
        if not 0.0 <= value <= 1.0:
            raise LabelParseError(f"soft value {value} outside [0, 1]", line_number)
        key = (onset, label)
        if key in entries:
            raise LabelParseError(f"duplicate entry for segment {onset} and class '{label}'", line_number)
        entries[key] = value
        max_offset = max(max_offset, offset)

    if duration is None:
        duration = max_offset
    elif max_offset > duration:
        raise LabelParseError(f"segment ending at {max_offset} exceeds duration {duration}")
    return SoftLabelTrack.from_entries(recording, duration, vocabulary.classes, entries)


def serialize_hard(events: HardLabelEvents) -> str:
    """规范化输出: 制表符分隔，按 (onset, label) 排序"""
    return ''.join(f"{e.onset}\t{e.offset}\t{e.label}\n" for e in events.canonical().events)


def format_value(value: float) -> str:
    """
    6 位小数；若舍入会让值跨过 0.5 或把正值变成 0，则写出能精确还原的最短形式

    例如 0.4999996 写作 0.4999996 而不是 0.500000。
    """
    value = float(value)
    text = f"{value:.6f}"
    rounded = float(text)
    if (rounded >= 0.5) != (value >= 0.5) or (rounded == 0.0) != (value == 0.0):
        return repr(value)
    return text


def serialize_soft(track: SoftLabelTrack) -> str:
    """规范化输出: 按 (片段, 类别名) 排序，6 位小数（见 format_value），省略为 0 的项"""
    order = sorted(range(len(track.classes)), key=lambda c: track.classes[c])
    lines = []
    for t in range(track.duration):
        for c in order:
            text = format_value(track.values[t, c])
            if float(text) == 0.0:
                continue
            lines.append(f"{t}\t{t + 1}\t{track.classes[c]}\t{text}\n")
    return ''.join(lines)


# ============================================================================
# 文件读写
# ============================================================================

def read_text(path: Union[str, Path], what: str = 'label') -> str:
    """
    读取 UTF-8 文本文件

    Raises:
        DataError: 文件无法读取或不是合法的 UTF-8
    """
    path = Path(path)
    try:
        return path.read_text(encoding='utf-8')
    except UnicodeDecodeError as e:
        raise DataError(f"{what} file {path} is not valid UTF-8 (byte {e.start})") from e
    except OSError as e:
        raise DataError(f"cannot read {what} file {path}: {e.strerror or e}") from e


def read_hard_labels(path: Union[str, Path], vocabulary: ClassVocabulary) -> HardLabelEvents:
    path = Path(path)
    return parse_hard_labels(read_text(path), vocabulary, recording=path.stem)


def read_soft_labels(
    path: Union[str, Path],
    vocabulary: ClassVocabulary,
    duration: Optional[int] = None,
) -> SoftLabelTrack:
    path = Path(path)
    if duration is None:
        duration = read_duration_hint(path)
    return parse_soft_labels(read_text(path), vocabulary, recording=path.stem, duration=duration)


def read_header(path: Union[str, Path]) -> Dict[str, str]:
    """读取文件开头注释行中的 key=value 字段"""
    fields: Dict[str, str] = {}
    for line in read_text(path).splitlines():
        if not line.startswith('#'):
            break
        for token in line[1:].split():
            if '=' in token:
                key, value = token.split('=', 1)
                fields.setdefault(key, value)
    return fields


def read_duration_hint(path: Union[str, Path]) -> Optional[int]:
    """从文件头注释中读取 duration=<秒>（由本工具写出的文件带有该字段）"""
    value = read_header(path).get('duration')
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise LabelParseError(f"{path}: invalid duration '{value}' in header") from None
