"""
测试硬标签 / 软标签文件的解析与序列化
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DataError, LabelParseError
from src.core.label_models import ClassVocabulary, HardLabelEvent, HardLabelEvents, SoftLabelTrack
from src.crowd.aggregate import binarize, events_from_activity
from src.labels.labelio import (
    parse_hard_labels,
    parse_soft_labels,
    read_duration_hint,
    read_header,
    read_soft_labels,
    serialize_hard,
    serialize_soft,
)
from src.labels.vocabulary import (
    DATASET_STATISTICS,
    DEFAULT_VOCABULARIES,
    count_instances,
    get_vocabulary,
    load_vocabularies,
    total_instances,
)

CLASSES = ('alarm', 'bird', 'car', 'people talking')
VOCAB = ClassVocabulary('test', CLASSES)


def test_hard_labels_accept_tabs_spaces_and_comments():
    text = "# header\n\n2\t5\tbird\n0 3 car\n7.0\t9\tpeople talking\n"
    events = parse_hard_labels(text, VOCAB, recording='r1')
    assert events.recording == 'r1'
    assert events.events == [
        HardLabelEvent(2, 5, 'bird'),
        HardLabelEvent(0, 3, 'car'),
        HardLabelEvent(7, 9, 'people talking'),
    ]


def test_serialize_hard_is_canonical():
    events = HardLabelEvents('r', [HardLabelEvent(4, 6, 'car'), HardLabelEvent(0, 2, 'bird'), HardLabelEvent(0, 1, 'alarm')])
    assert serialize_hard(events) == "0\t1\talarm\n0\t2\tbird\n4\t6\tcar\n"


@pytest.mark.parametrize('line, fragment', [
    ("0\t2\n", "expected 3 fields"),
    ("0\t2.5\tcar\n", "whole second"),
    ("3\t3\tcar\n", "greater than onset"),
    ("x\t3\tcar\n", "not a number"),
])
def test_hard_label_errors_carry_line_numbers(line, fragment):
    with pytest.raises(LabelParseError) as info:
        parse_hard_labels("0\t1\tcar\n" + line, VOCAB)
    assert info.value.line_number == 2
    assert fragment in info.value.message
    assert info.value.exit_code == 3


def test_unknown_label_is_reported():
    with pytest.raises(LabelParseError) as info:
        parse_hard_labels("0\t1\tdog\n", VOCAB)
    assert info.value.label == 'dog'
    assert info.value.line_number == 1


def test_label_with_space_needs_tab_separator():
    with pytest.raises(LabelParseError):
        parse_hard_labels("0 1 people talking\n", VOCAB)


def test_soft_labels_fill_missing_entries_with_zero():
    track = parse_soft_labels("0\t1\tcar\t0.25\n3\t4\tbird\t1.0\n", VOCAB, recording='r')
    assert track.duration == 4
    assert track.get(0, 'car') == 0.25
    assert track.get(3, 'bird') == 1.0
    assert track.get(1, 'alarm') == 0.0
    assert track.values.sum() == pytest.approx(1.25)


@pytest.mark.parametrize('text, fragment', [
    ("0\t2\tcar\t0.5\n", "one second"),
    ("0\t1\tcar\t1.5\n", "outside [0, 1]"),
    ("0\t1\tcar\t0.5\n0\t1\tcar\t0.6\n", "duplicate"),
    ("0\t1\tcar\n", "expected 4 fields"),
])
def test_soft_label_errors(text, fragment):
    with pytest.raises(LabelParseError) as info:
        parse_soft_labels(text, VOCAB)
    assert fragment in info.value.message


def test_soft_labels_longer_than_declared_duration():
    with pytest.raises(LabelParseError):
        parse_soft_labels("5\t6\tcar\t0.5\n", VOCAB, duration=3)


def test_serialize_soft_orders_by_segment_then_class_and_skips_zeros():
    track = SoftLabelTrack.from_entries('r', 2, CLASSES, {(1, 'car'): 0.5, (0, 'bird'): 1.0, (1, 'alarm'): 0.1234567})
    assert serialize_soft(track) == "0\t1\tbird\t1.000000\n1\t2\talarm\t0.123457\n1\t2\tcar\t0.500000\n"


def test_serialize_soft_keeps_side_of_one_half_and_tiny_positives():
    """舍入到 6 位小数会改变二值化结果或丢掉正值时写出精确值"""
    track = SoftLabelTrack.from_entries('r', 2, CLASSES, {(0, 'car'): 0.4999996, (1, 'car'): 3e-7, (1, 'bird'): 0.5000004})
    text = serialize_soft(track)
    assert text == "0\t1\tcar\t0.4999996\n1\t2\tbird\t0.500000\n1\t2\tcar\t3e-07\n"
    parsed = parse_soft_labels(text, VOCAB, recording='r', duration=2)
    assert parsed.get(0, 'car') == 0.4999996
    assert binarize(parsed, 0.5) == binarize(track, 0.5)


def test_unreadable_label_files_are_data_errors(tmp_path):
    path = tmp_path / 'r.txt'
    path.write_bytes(b"0\t1\tcar\t0.5\n\xff\n")
    with pytest.raises(DataError, match='UTF-8'):
        read_soft_labels(path, VOCAB, duration=3)
    with pytest.raises(DataError, match='cannot read'):
        read_soft_labels(tmp_path / 'missing.txt', VOCAB, duration=3)
    with pytest.raises(DataError):
        read_soft_labels(tmp_path, VOCAB, duration=3)


def test_header_fields_and_duration_hint(tmp_path):
    path = tmp_path / 'r.txt'
    path.write_text("# softsed config=abc seed=7 kind=soft-labels duration=12\n0\t1\tcar\t0.5\n", encoding='utf-8')
    assert read_header(path) == {'config': 'abc', 'seed': '7', 'kind': 'soft-labels', 'duration': '12'}
    assert read_duration_hint(path) == 12
    track = read_soft_labels(path, VOCAB)
    assert track.recording == 'r'
    assert track.duration == 12


def test_bad_duration_hint(tmp_path):
    path = tmp_path / 'r.txt'
    path.write_text("# softsed duration=ten\n", encoding='utf-8')
    with pytest.raises(LabelParseError):
        read_duration_hint(path)


# ============================================================================
# 生成式往返测试
# ============================================================================

@st.composite
def hard_label_files(draw):
    n = draw(st.integers(min_value=0, max_value=15))
    events = []
    for _ in range(n):
        onset = draw(st.integers(min_value=0, max_value=500))
        length = draw(st.integers(min_value=1, max_value=60))
        events.append(HardLabelEvent(onset, onset + length, draw(st.sampled_from(CLASSES))))
    return HardLabelEvents('gen', events).canonical()


@st.composite
def activity_and_soft(draw):
    duration = draw(st.integers(min_value=1, max_value=40))
    seed = draw(st.integers(min_value=0, max_value=2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    active = rng.random((duration, len(CLASSES))) < 0.3
    # 活动片段取 [0.5, 1]，静默片段取 [0, 0.5)，保留 6 位小数
    values = np.where(active, rng.integers(500000, 1000001, active.shape), rng.integers(0, 500000, active.shape))
    return active, SoftLabelTrack('gen', duration, CLASSES, values / 1e6)


@settings(max_examples=100, deadline=None)
@given(hard_label_files())
def test_hard_label_round_trip(events):
    assert parse_hard_labels(serialize_hard(events), VOCAB, recording='gen').events == events.events


@settings(max_examples=100, deadline=None)
@given(activity_and_soft())
def test_soft_round_trip_and_binarize_reproduces_hard_file(case):
    active, track = case
    parsed = parse_soft_labels(serialize_soft(track), VOCAB, recording='gen', duration=track.duration)
    assert parsed == track

    expected = events_from_activity(binarize(SoftLabelTrack('gen', track.duration, CLASSES, active.astype(float)), 0.5))
    hard_text = serialize_hard(expected)
    assert serialize_hard(events_from_activity(binarize(parsed, 0.5))) == hard_text


# ============================================================================
# 词表
# ============================================================================

def test_default_vocabularies_have_six_classes_per_scene():
    assert len(DEFAULT_VOCABULARIES) == 5
    assert all(len(v) == 6 for v in DEFAULT_VOCABULARIES.values())
    with pytest.raises(DataError):
        get_vocabulary('beach')


def test_released_statistics_totals():
    totals = total_instances(DATASET_STATISTICS)
    assert totals['people talking'] == 307
    assert totals['footsteps'] == 237
    assert sum(entry['files'] for entry in DATASET_STATISTICS.values()) == 75


def test_count_instances_by_scene():
    events = {
        'a': HardLabelEvents('a', [HardLabelEvent(0, 2, 'car'), HardLabelEvent(3, 4, 'car')]),
        'b': HardLabelEvents('b', [HardLabelEvent(0, 1, 'bird')]),
    }
    stats = count_instances(events, {'a': 'x', 'b': 'y'})
    assert stats['x'] == {'instances': {'car': 2}, 'files': 1}
    assert total_instances(stats) == {'car': 2, 'bird': 1}


def test_load_vocabularies(tmp_path):
    path = tmp_path / 'vocab.yaml'
    path.write_text("scenes:\n  park: [bird, dog]\n", encoding='utf-8')
    vocabularies = load_vocabularies(path)
    assert vocabularies['park'].classes == ('bird', 'dog')

    path.write_text("scenes:\n  park: [bird, bird]\n", encoding='utf-8')
    with pytest.raises(DataError):
        load_vocabularies(path)
