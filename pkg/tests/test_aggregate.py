"""
测试软标签聚合、二值化与事件提取
"""

import logging
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DataError, UsageError
from src.core.label_models import Assignment, ClassVocabulary, HardLabelEvent, HardLabelEvents, SoftLabelTrack, WeakAnnotationSet
from src.crowd.aggregate import (
    aggregate_opinions,
    aggregate_track,
    binarize,
    build_opinions,
    coverage_report,
    events_from_activity,
    rasterize,
    serialize_coverage,
    soft_label,
    uniform_competence,
)
from src.crowd.competence import CompetenceTable, estimate_competence, materialize_votes
from src.crowd.simulator import gen_annotations, gen_truth, make_pool
from src.evaluation.metrics import segment_eval
from src.schemas.config_schemas import CompetenceConfig, SimulatorConfig


def test_minority_of_competent_annotators_overrides_majority():
    table = CompetenceTable(theta={'A': 0.9, 'B': 0.9, 'C': 0.3, 'D': 0.3, 'E': 0.3})
    opinions = [('A', 1), ('B', 1), ('C', 0), ('D', 0), ('E', 0)]
    value, covered = soft_label(opinions, table)
    assert covered
    assert round(value, 4) == 0.6667
    track = SoftLabelTrack('r', 1, ('x',), np.array([[value]]))
    assert binarize(track, 0.5).active[0, 0]


def test_soft_label_matches_brute_force_average():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        names = [f"A{j}" for j in range(n)]
        theta = rng.uniform(0.01, 0.99, size=n)
        votes = rng.integers(0, 2, size=n)
        table = CompetenceTable(theta=dict(zip(names, theta)))
        numerator = 0.0
        denominator = 0.0
        for w, v in zip(theta, votes):
            numerator += w * v
            denominator += w
        value, _ = soft_label(list(zip(names, votes)), table)
        assert abs(value - numerator / denominator) <= 1e-12
    assert time.perf_counter() - start < 1.0


def test_no_opinions_means_uncovered():
    assert soft_label([], CompetenceTable(theta={})) == (0.0, False)


weights = st.floats(min_value=0.05, max_value=0.95)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(weights, st.integers(0, 1)), min_size=1, max_size=10),
       st.floats(min_value=0.1, max_value=1.0))
def test_soft_label_scale_invariance_and_bounds(opinions, scale):
    names = [f"A{j}" for j in range(len(opinions))]
    table = CompetenceTable(theta={n: w for n, (w, _) in zip(names, opinions)})
    scaled = CompetenceTable(theta={n: w * scale for n, (w, _) in zip(names, opinions)})
    votes = [(n, v) for n, (_, v) in zip(names, opinions)]
    value, _ = soft_label(votes, table)
    assert 0.0 <= value <= 1.0
    assert soft_label(votes, scaled).value == pytest.approx(value, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(weights, st.integers(0, 1)), min_size=1, max_size=10), st.data())
def test_soft_label_monotone_in_votes(opinions, data):
    names = [f"A{j}" for j in range(len(opinions))]
    table = CompetenceTable(theta={n: w for n, (w, _) in zip(names, opinions)})
    votes = [(n, v) for n, (_, v) in zip(names, opinions)]
    flip = data.draw(st.integers(0, len(votes) - 1))
    raised = list(votes)
    raised[flip] = (votes[flip][0], 1)
    assert soft_label(raised, table).value >= soft_label(votes, table).value - 1e-12


def _overlapping(vocabulary):
    return WeakAnnotationSet('r', vocabulary.classes, window=3, hop=1, assignments=[
        Assignment('A', 0, frozenset({'car'})),
        Assignment('A', 1, frozenset()),
        Assignment('B', 1, frozenset({'car', 'bird'})),
    ], duration=5)


def test_build_opinions_expands_windows(vocabulary):
    opinions = build_opinions(_overlapping(vocabulary), vocabulary)
    assert opinions.counts().tolist() == [1, 3, 3, 2, 0]
    assert sorted(opinions.opinions(1, 'car')) == [('A', 0.0), ('A', 1.0), ('B', 1.0)]


def test_dedup_averages_an_annotators_windows(vocabulary):
    opinions = build_opinions(_overlapping(vocabulary), vocabulary, dedup=True)
    assert opinions.counts().tolist() == [1, 2, 2, 2, 0]
    assert sorted(opinions.opinions(1, 'car')) == [('A', 0.5), ('B', 1.0)]


def test_aggregate_matches_per_segment_soft_label(vocabulary, caplog):
    annotations = _overlapping(vocabulary)
    table = CompetenceTable(theta={'A': 0.8, 'B': 0.4})
    opinions = build_opinions(annotations, vocabulary)
    with caplog.at_level(logging.WARNING):
        track = aggregate_opinions(opinions, table)
    assert 'no annotation coverage' in caplog.text
    for t in range(5):
        for label in vocabulary.classes:
            assert track.get(t, label) == pytest.approx(soft_label(opinions.opinions(t, label), table).value, abs=1e-12)
    assert track.get(1, 'car') == pytest.approx((0.8 * 0 + 0.8 * 1 + 0.4 * 1) / 2.0)
    assert track.get(4, 'car') == 0.0


def test_uniform_competence_counts_votes(vocabulary):
    annotations = _overlapping(vocabulary)
    track = aggregate_track(annotations, uniform_competence(annotations.annotators()), vocabulary)
    assert track.get(2, 'car') == pytest.approx(2.0 / 3.0)
    assert track.get(3, 'bird') == pytest.approx(0.5)


def test_unknown_annotator_in_table(vocabulary):
    with pytest.raises(DataError):
        aggregate_track(_overlapping(vocabulary), CompetenceTable(theta={'A': 0.5}), vocabulary)


def test_coverage_report(vocabulary):
    report = coverage_report(build_opinions(_overlapping(vocabulary), vocabulary))
    assert report[:3] == [(0, 'alarm', 1), (0, 'bird', 1), (0, 'car', 1)]
    assert serialize_coverage(report).splitlines()[-1] == "4\tcar\t0"


def test_binarize_threshold_rules():
    track = SoftLabelTrack('r', 3, ('x', 'y'), np.array([[0.5, 0.2], [0.49, 0.3], [1.0, 0.0]]))
    assert binarize(track, 0.5).active.tolist() == [[True, False], [False, False], [True, False]]
    assert binarize(track, {'x': 0.9, 'y': 0.25}).active.tolist() == [[False, False], [False, True], [True, False]]
    for bad in (0.0, 1.0, 1.01, float('nan')):
        with pytest.raises(UsageError):
            binarize(track, bad)
    with pytest.raises(UsageError):
        binarize(track, {'x': 0.5})


def test_events_and_rasterize_are_inverse():
    track = SoftLabelTrack('r', 8, ('x', 'y'), np.array(
        [[1, 0], [1, 0], [0, 1], [0, 1], [1, 1], [0, 0], [0, 0], [1, 0]], dtype=float))
    events = events_from_activity(binarize(track, 0.5))
    assert events.events == [
        HardLabelEvent(0, 2, 'x'), HardLabelEvent(2, 5, 'y'), HardLabelEvent(4, 5, 'x'), HardLabelEvent(7, 8, 'x'),
    ]
    assert rasterize(events, ('x', 'y'), 8) == binarize(track, 0.5)


def test_rasterize_rejects_events_past_duration():
    with pytest.raises(DataError):
        rasterize(HardLabelEvents('r', [HardLabelEvent(3, 9, 'x')]), ('x',), 5)


def _simulated_annotations(theta_range=(0.6, 1.0), duration=60, seed=30):
    config = SimulatorConfig(duration=duration, classes=['alarm', 'bird', 'car'], event_rate=0.05, mean_duration=6.0)
    truth = gen_truth(config, seed=seed)
    pool = make_pool(12, seed=seed + 1, theta_range=theta_range)
    annotations = gen_annotations(truth, pool, k=5, seed=seed + 2, window=10, hop=1)
    return truth, annotations, ClassVocabulary('sim', truth.classes)


def test_interior_segments_collect_window_times_k_opinions():
    """W = 10、H = 1、k = 5 时内部片段有 50 条意见"""
    _, annotations, vocabulary = _simulated_annotations()
    counts = build_opinions(annotations, vocabulary).counts()
    assert counts[9:51].tolist() == [50] * 42
    assert counts[0] == 5
    assert counts[-1] == 5


def test_soft_labels_ignore_annotator_order_and_names():
    _, annotations, vocabulary = _simulated_annotations(seed=40)
    table = CompetenceTable(theta={a: 0.3 + 0.05 * j for j, a in enumerate(annotations.annotators())})
    original = aggregate_track(annotations, table, vocabulary)

    rename = {a: f"Z{99 - j}" for j, a in enumerate(annotations.annotators())}
    order = np.random.default_rng(41).permutation(len(annotations.assignments))
    shuffled = WeakAnnotationSet(
        annotations.recording, annotations.classes, annotations.window, annotations.hop,
        [Assignment(rename[annotations.assignments[n].annotator], annotations.assignments[n].start,
                    annotations.assignments[n].selected) for n in order],
        duration=annotations.duration,
    )
    renamed_table = CompetenceTable(theta={rename[a]: t for a, t in table.theta.items()})
    permuted = aggregate_track(shuffled, renamed_table, vocabulary)
    assert np.allclose(permuted.values, original.values, atol=1e-12)


def test_perfect_annotators_reproduce_weak_label_rasterization():
    """θ = 1 时每个片段的软标签等于覆盖它的窗口中弱标签为 1 的比例"""
    truth, annotations, vocabulary = _simulated_annotations(theta_range=(1.0, 1.0), seed=50)
    track = aggregate_track(annotations, uniform_competence(annotations.annotators()), vocabulary)

    starts = list(range(0, truth.duration - 10 + 1))
    weak = truth.weak_labels(10, 1).astype(float)
    expected = np.zeros((truth.duration, len(truth.classes)))
    for t in range(truth.duration):
        covering = [w for w, s in enumerate(starts) if s <= t < s + 10]
        expected[t] = weak[covering].mean(axis=0)
    assert np.allclose(track.values, expected, atol=1e-12)
    assert binarize(track, 0.5).active.tolist() == (expected >= 0.5).tolist()
    # 真值活动的片段所在的每个窗口都为正
    assert np.all(track.values[truth.active.astype(bool)] == 1.0)


def test_crowd_pipeline_recovers_truth():
    """
    模拟真值 → 弱标注 → 能力估计 → 聚合 → 0.5 二值化，与真值比较

    事件稀疏且较长（到达率 0.005/s，平均 100 s）。W = 10 的窗口会把短事件
    两侧的片段也标为正，默认的 0.02/s、8 s 下 F1 约为 0.69。
    """
    start = time.perf_counter()
    config = SimulatorConfig(
        duration=600, classes=['alarm', 'bird', 'car'],
        event_rate=0.005, mean_duration=100.0,
        n_annotators=20, theta_low=0.6, theta_high=1.0, annotators_per_window=5,
    )
    truth = gen_truth(config, seed=21)
    pool = make_pool(20, seed=22, theta_range=(0.6, 1.0))
    annotations = gen_annotations(truth, pool, k=5, seed=23, window=10, hop=1)

    vocabulary = ClassVocabulary('sim', truth.classes)
    table = estimate_competence(materialize_votes(annotations, vocabulary),
                                CompetenceConfig(iterations=50, restarts=3), seed=24)
    track = aggregate_track(annotations, table, vocabulary)
    report = segment_eval(truth.as_activity(), binarize(track, 0.5))
    assert report.f1 >= 0.90
    assert time.perf_counter() - start < 30.0
