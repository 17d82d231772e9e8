"""
测试弱标注文件
"""

import pytest

from src.core.errors import DataError, LabelParseError
from src.core.label_models import Assignment, WeakAnnotationSet
from src.labels.annotation_io import parse_annotations, read_annotations, selected_labels, serialize_annotations

CLASSES = ('alarm', 'bird', 'car')


def _annotations():
    return WeakAnnotationSet(
        recording='r',
        classes=CLASSES,
        window=3,
        hop=1,
        assignments=[
            Assignment('B', 1, frozenset({'car', 'alarm'})),
            Assignment('A', 0, frozenset()),
            Assignment('A', 1, frozenset({'bird'})),
        ],
        duration=5,
    )


def test_serialize_sorts_and_marks_empty_assignments():
    assert serialize_annotations(_annotations()) == (
        "A\t0\t3\t-\n"
        "A\t1\t4\tbird\n"
        "B\t1\t4\talarm\n"
        "B\t1\t4\tcar\n"
    )


def test_parse_restores_every_assignment(vocabulary):
    parsed = parse_annotations(serialize_annotations(_annotations()), vocabulary, recording='r', duration=5)
    assert parsed.window == 3
    assert selected_labels(parsed) == selected_labels(_annotations())
    assert parsed.annotators() == ['A', 'B']
    assert parsed.span() == 4


def test_read_uses_duration_from_header(tmp_path, vocabulary):
    path = tmp_path / 'rec.tsv'
    path.write_text("# softsed kind=annotations duration=5\n" + serialize_annotations(_annotations()), encoding='utf-8')
    parsed = read_annotations(path, vocabulary)
    assert parsed.recording == 'rec'
    assert parsed.duration == 5


@pytest.mark.parametrize('text, fragment', [
    ("A\t0\t3\tcar\nA\t1\t5\tcar\n", "differs"),
    ("A\t1\t3\tcar\n", "multiple of hop"),
    ("A\t0\t3\tdog\n", "unknown label"),
    ("A\t0\t3\n", "expected 4 fields"),
    ("A\t4\t7\tcar\n", "exceeds duration"),
])
def test_parse_errors(text, fragment, vocabulary):
    hop = 2 if 'multiple' in fragment else 1
    with pytest.raises(LabelParseError) as info:
        parse_annotations(text, vocabulary, hop=hop, duration=5)
    assert fragment in info.value.message


def test_duplicate_assignment_rejected():
    with pytest.raises(DataError):
        WeakAnnotationSet('r', CLASSES, 3, 1, [Assignment('A', 0), Assignment('A', 0, frozenset({'car'}))])


def test_positive_votes():
    votes = _annotations().votes
    assert ('B', 1, 'alarm', 1) in votes
    assert len(votes) == 3
