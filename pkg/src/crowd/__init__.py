"""
Crowd - 众包模拟、标注者能力估计与软标签聚合
"""

from .simulator import (
    Annotator,
    TrueActivityTrack,
    gen_truth,
    gen_annotations,
    make_pool,
    synthesize_features,
    simulate_recordings,
    window_starts,
)
from .competence import (
    VoteMatrix,
    CompetenceTable,
    materialize_votes,
    estimate_competence,
    estimate_competence_by_group,
    majority_vote,
    weighted_vote,
    serialize_competence,
    parse_competence,
    read_competence,
)
from .aggregate import (
    OpinionMatrix,
    SoftLabel,
    build_opinions,
    soft_label,
    aggregate_opinions,
    aggregate_track,
    uniform_competence,
    coverage_report,
    serialize_coverage,
    binarize,
    events_from_activity,
    rasterize,
)

__all__ = [
    'Annotator',
    'TrueActivityTrack',
    'gen_truth',
    'gen_annotations',
    'make_pool',
    'synthesize_features',
    'simulate_recordings',
    'window_starts',
    'VoteMatrix',
    'CompetenceTable',
    'materialize_votes',
    'estimate_competence',
    'estimate_competence_by_group',
    'majority_vote',
    'weighted_vote',
    'serialize_competence',
    'parse_competence',
    'read_competence',
    'OpinionMatrix',
    'SoftLabel',
    'build_opinions',
    'soft_label',
    'aggregate_opinions',
    'aggregate_track',
    'uniform_competence',
    'coverage_report',
    'serialize_coverage',
    'binarize',
    'events_from_activity',
    'rasterize',
]
