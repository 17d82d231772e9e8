"""
Stages - 流水线各阶段

每个阶段只通过文件交接: 读取上游阶段写出的产物，写出带来源注释的新产物。
目录布局（均可在 paths 中单独配置）:

    annotations/<rec>.tsv       弱标注
    truth/<rec>.txt             模拟真值（硬标签格式）
    features/<rec>.feat         帧级 log-mel 特征
    competence.tsv              标注者能力表
    soft/<rec>.txt              软标签
    hard/<rec>.txt              硬标签
    thresholds.tsv              类别阈值
    models/<SETUP>.params       模型参数
    predictions/<SETUP>/<rec>.tsv
    reports/report.txt, reports/metrics.tsv
"""

import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DataError, UsageError
from ..core.label_models import ClassVocabulary, SoftLabelTrack, ThresholdedActivity
from ..core.output_formatter import ReportFormatter
from ..core.setups import LossKind, ThresholdMethod, TrainingSetup
from ..crowd.aggregate import (
    aggregate_opinions,
    binarize,
    build_opinions,
    coverage_report,
    events_from_activity,
    rasterize,
    serialize_coverage,
    uniform_competence,
)
from ..crowd.competence import (
    CompetenceTable,
    estimate_competence,
    estimate_competence_by_group,
    materialize_votes,
    read_competence,
    serialize_competence,
)
from ..crowd.simulator import simulate_recordings, synthesize_features
from ..evaluation.metrics import kld, report_lines, report_text, segment_eval_many
from ..evaluation.thresholds import (
    ThresholdTable,
    class_thresholds,
    fixed_thresholds,
    read_thresholds,
    serialize_thresholds,
)
from ..features.feature_io import read_features, read_wav, write_features
from ..features.mel import mel_energies, segment_pool
from ..labels.annotation_io import read_annotations, serialize_annotations
from ..labels.labelio import (
    parse_hard_labels,
    read_duration_hint,
    read_hard_labels,
    read_header,
    read_soft_labels,
    read_text,
    serialize_hard,
    serialize_soft,
)
from ..labels.vocabulary import (
    DATASET_STATISTICS,
    DEFAULT_VOCABULARIES,
    count_instances,
    get_vocabulary,
    load_vocabularies,
    merged_vocabulary,
    total_instances,
)
from ..schemas.config_schemas import PipelineConfig
from ..storage.artifact_repo import ArtifactRepository
from ..training.param_io import load_params, save_params
from ..training.trainer import (
    ScoreTrack,
    build_dataset,
    parse_scores,
    predict,
    serialize_scores,
    train,
)
from .run_manager import RunManager

logger = logging.getLogger(__name__)

ANNOTATION_SUFFIX = '.tsv'
LABEL_SUFFIX = '.txt'
FEATURE_SUFFIX = '.feat'
PREDICTION_SUFFIX = '.tsv'
PARAMS_SUFFIX = '.params'

# 汇总表的行: (训练设置, 是否使用类别阈值)
REPORT_ROWS: Tuple[Tuple[TrainingSetup, bool], ...] = (
    (TrainingSetup.H_BCE_SIG, False),
    (TrainingSetup.S_BCE_SIG, False),
    (TrainingSetup.S_MSE_LIN, False),
    (TrainingSetup.S_MSE_LIN, True),
    (TrainingSetup.H_BCE_SIG, True),
)


def resolve_vocabulary(pipeline: PipelineConfig) -> ClassVocabulary:
    """词表文件 > simulator.classes > 内置场景词表"""
    scene = pipeline.simulator.scene
    if pipeline.paths.vocabulary_file:
        return get_vocabulary(scene, load_vocabularies(pipeline.paths.vocabulary_file))
    if pipeline.simulator.classes:
        return ClassVocabulary(scene, tuple(pipeline.simulator.classes))
    return get_vocabulary(scene)


def split_recordings(recordings: Sequence[str], fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    """
    按录音划分训练集 / 测试集

    Returns:
        (train, test)，各自按名称排序；只有一段录音或 fraction 为 0 时测试集为空
    """
    ordered = sorted(recordings)
    n = len(ordered)
    n_test = int(round(fraction * n))
    if fraction > 0 and n > 1:
        n_test = min(max(n_test, 1), n - 1)
    else:
        n_test = 0
    order = np.random.default_rng([seed, 3]).permutation(n)
    test = sorted(ordered[i] for i in order[:n_test])
    train_set = sorted(ordered[i] for i in order[n_test:])
    return train_set, test


class PipelineStages:
    """流水线阶段集合，共享配置、词表和产物仓库"""

    def __init__(self, pipeline: PipelineConfig, config_hash: str, manager: Optional[RunManager] = None):
        self.pipeline = pipeline
        self.paths = pipeline.paths
        self.repo = ArtifactRepository(config_hash, pipeline.seed)
        self.manager = manager or RunManager()
        self.vocabulary = resolve_vocabulary(pipeline)

    def path(self, name: str) -> Path:
        return self.paths.resolve(name)

    # ========================================================================
    # 录音集合
    # ========================================================================

    def soft_recordings(self) -> List[str]:
        recordings = self.repo.recordings(self.path('soft_labels_dir'), LABEL_SUFFIX)
        if not recordings:
            raise DataError(f"no soft label files in {self.path('soft_labels_dir')}")
        return recordings

    def split(self) -> Tuple[List[str], List[str]]:
        train_set, test = split_recordings(
            self.soft_recordings(), self.pipeline.training.validation_fraction, self.pipeline.seed
        )
        return train_set, test or train_set

    def read_soft(self, recording: str) -> SoftLabelTrack:
        path = self.repo.require_file(self.path('soft_labels_dir') / f"{recording}{LABEL_SUFFIX}", 'soft label')
        return read_soft_labels(path, self.vocabulary)

    def read_segments(self, recording: str, n_segments: int):
        cfg = self.pipeline.features
        path = self.repo.require_file(self.path('features_dir') / f"{recording}{FEATURE_SUFFIX}", 'feature')
        features = read_features(path, cfg.sample_rate, cfg.n_fft)
        return segment_pool(features, n_segments=n_segments)

    # ========================================================================
    # simulate
    # ========================================================================

    def simulate(self) -> List[Path]:
        """模拟录音: 真值、弱标注和合成特征"""
        seed = self.pipeline.seed
        sim = self.pipeline.simulator.model_copy(update={'classes': list(self.vocabulary.classes)})
        pool, truths, annotation_sets = simulate_recordings(sim, seed)
        feature_seeds = np.random.SeedSequence([seed, 1]).spawn(len(truths))
        envelope_seed = np.random.SeedSequence([seed, 2])
        extra = {'scene': sim.scene}

        pool_lines = ''.join(f"{a.id}\t{a.competence:.6f}\t{a.spam_bias:.6f}\n" for a in pool)
        artifacts = [self.repo.write_text(
            Path(self.paths.work_dir) / 'annotators.tsv', 'annotator-pool', pool_lines
        )]

        def write_recording(index: int) -> List[Path]:
            truth, annotations = truths[index], annotation_sets[index]
            rec_extra = {'duration': truth.duration, **extra}
            written = [
                self.repo.write_text(
                    self.path('truth_dir') / f"{truth.recording}{LABEL_SUFFIX}", 'truth',
                    serialize_hard(events_from_activity(truth.as_activity())), rec_extra,
                ),
                self.repo.write_text(
                    self.path('annotations_dir') / f"{truth.recording}{ANNOTATION_SUFFIX}", 'annotations',
                    serialize_annotations(annotations), rec_extra,
                ),
            ]
            features = synthesize_features(truth, self.pipeline.features, feature_seeds[index], envelope_seed)
            written.append(self.repo.write_binary(
                self.path('features_dir') / f"{truth.recording}{FEATURE_SUFFIX}", 'features',
                lambda p: write_features(p, features), rec_extra,
            ))
            return written

        for written in self.manager.map(write_recording, list(range(len(truths)))):
            artifacts.extend(written)
        return artifacts

    # ========================================================================
    # estimate-competence
    # ========================================================================

    def _annotation_files(self) -> List[Path]:
        directory = self.repo.require_dir(self.path('annotations_dir'), 'annotation')
        files = self.repo.list(directory, ANNOTATION_SUFFIX)
        if not files:
            raise DataError(f"no annotation files in {directory}")
        return files

    def _scene_of(self, path: Path) -> str:
        return read_header(path).get('scene', self.vocabulary.scene)

    def _competence_path(self, scene: Optional[str] = None) -> Path:
        path = self.path('competence_file')
        if scene is None:
            return path
        return path.with_name(f"{path.stem}.{scene}{path.suffix}")

    def estimate_competence(self) -> List[Path]:
        """EM 估计标注者能力（全局或按场景）"""
        cfg = self.pipeline.competence
        hop = self.pipeline.simulator.hop
        files = self._annotation_files()
        sets = [read_annotations(p, self.vocabulary, hop=hop) for p in files]

        if cfg.per_scene:
            groups: Dict[str, list] = OrderedDict()
            for path, annotation_set in zip(files, sets):
                groups.setdefault(self._scene_of(path), []).append(annotation_set)
            matrices = {scene: materialize_votes(group, self.vocabulary) for scene, group in groups.items()}
            tables = estimate_competence_by_group(matrices, cfg, self.pipeline.seed)
            return [
                self.repo.write_text(self._competence_path(scene), 'competence',
                                     serialize_competence(table), {'scene': scene})
                for scene, table in tables.items()
            ]

        table = estimate_competence(materialize_votes(sets, self.vocabulary), cfg, self.pipeline.seed)
        logger.info(f"Estimated competence for {len(table.theta)} annotators, mean θ={table.mean_theta():.3f}")
        return [self.repo.write_text(self._competence_path(), 'competence', serialize_competence(table))]

    # ========================================================================
    # aggregate
    # ========================================================================

    def _competence_for(self, path: Path, annotators: Sequence[str]) -> CompetenceTable:
        if self.pipeline.aggregation.weighting == 'uniform':
            return uniform_competence(annotators)
        scene = self._scene_of(path) if self.pipeline.competence.per_scene else None
        table_path = self.repo.require_file(self._competence_path(scene), 'competence')
        return read_competence(table_path)

    def aggregate(self) -> List[Path]:
        """弱标注 -> 软标签，并写出覆盖报告"""
        hop = self.pipeline.simulator.hop
        dedup = self.pipeline.aggregation.dedup_annotators

        def aggregate_file(path: Path) -> List[Path]:
            annotations = read_annotations(path, self.vocabulary, hop=hop)
            table = self._competence_for(path, annotations.annotators())
            opinions = build_opinions(annotations, self.vocabulary, dedup=dedup)
            track = aggregate_opinions(opinions, table)
            extra = {'duration': track.duration, 'scene': self._scene_of(path)}
            recording = annotations.recording
            return [
                self.repo.write_text(self.path('soft_labels_dir') / f"{recording}{LABEL_SUFFIX}",
                                     'soft-labels', serialize_soft(track), extra),
                self.repo.write_text(self.path('reports_dir') / 'coverage' / f"{recording}.tsv",
                                     'coverage', serialize_coverage(coverage_report(opinions)), extra),
            ]

        artifacts: List[Path] = []
        for written in self.manager.map(aggregate_file, self._annotation_files()):
            artifacts.extend(written)
        return artifacts

    # ========================================================================
    # binarize
    # ========================================================================

    def binarize(
        self,
        threshold: Optional[float] = None,
        thresholds_file: Optional[str] = None,
        input_dir: Optional[str] = None,
        output_dir: Optional[str] = None,
    ) -> List[Path]:
        """软标签 -> 硬标签事件"""
        source = self.repo.require_dir(input_dir or self.path('soft_labels_dir'), 'soft label')
        target = Path(output_dir) if output_dir else self.path('hard_labels_dir')
        if thresholds_file:
            table = read_thresholds(self.repo.require_file(thresholds_file, 'threshold'))
        else:
            value = threshold if threshold is not None else self.pipeline.thresholds.fixed_threshold
            table = fixed_thresholds(self.vocabulary.classes, value)
        files = self.repo.list(source, LABEL_SUFFIX)
        if not files:
            raise DataError(f"no soft label files in {source}")

        artifacts = []
        for path in files:
            track = read_soft_labels(path, self.vocabulary)
            events = events_from_activity(binarize(track, table.thresholds))
            artifacts.append(self.repo.write_text(
                target / path.name, 'hard-labels', serialize_hard(events),
                {'duration': track.duration, 'method': table.method.value},
            ))
        return artifacts

    # ========================================================================
    # thresholds
    # ========================================================================

    def thresholds(self) -> List[Path]:
        """训练集软标签 -> 类别阈值"""
        cfg = self.pipeline.thresholds
        train_set, _ = self.split()
        if cfg.method is ThresholdMethod.FIXED:
            table = fixed_thresholds(self.vocabulary.classes, cfg.fixed_threshold)
        else:
            tracks = [self.read_soft(r) for r in train_set]
            table = class_thresholds(tracks, self.vocabulary.classes, cfg.trim, cfg.positives_only)
        return [self.repo.write_text(self.path('thresholds_file'), 'thresholds', serialize_thresholds(table))]

    # ========================================================================
    # extract-features
    # ========================================================================

    def extract_features(self, audio_dir: Optional[str] = None) -> List[Path]:
        """WAV -> 帧级 log-mel 特征"""
        cfg = self.pipeline.features
        directory = self.repo.require_dir(audio_dir or self.path('audio_dir'), 'audio')
        files = self.repo.list(directory, '.wav')
        if not files:
            raise DataError(f"no .wav files in {directory}")

        def extract(path: Path) -> Path:
            recording = path.name[:-len('.wav')]
            samples = read_wav(path, cfg.sample_rate)
            features = mel_energies(samples, cfg.sample_rate, cfg, recording=recording)
            return self.repo.write_binary(
                self.path('features_dir') / f"{recording}{FEATURE_SUFFIX}", 'features',
                lambda p: write_features(p, features),
                {'duration': int(np.floor(features.duration_seconds))},
            )

        return self.manager.map(extract, files)

    # ========================================================================
    # train / predict
    # ========================================================================

    def _setups(self, setups: Optional[Sequence[TrainingSetup]]) -> List[TrainingSetup]:
        chosen = list(setups) if setups else list(self.pipeline.training.setups)
        if not chosen:
            raise UsageError("no training setups selected")
        return [TrainingSetup(s) for s in chosen]

    def _dataset(self, recordings: Sequence[str], setup: TrainingSetup):
        tracks = [self.read_soft(r) for r in recordings]
        segments = self.manager.map(lambda t: self.read_segments(t.recording, t.duration), tracks)
        return build_dataset(segments, tracks, setup)

    def train(self, setups: Optional[Sequence[TrainingSetup]] = None) -> List[Path]:
        """按训练设置训练并保存模型参数"""
        train_set, test = self.split()
        held_out = [r for r in test if r not in train_set]
        artifacts = []
        for setup in self._setups(setups):
            dataset = self._dataset(train_set, setup)
            validation = self._dataset(held_out, setup) if held_out else None
            run = train(dataset, setup, self.pipeline.training, self.pipeline.seed, validation)
            extra = {'setup': setup.value, 'head': setup.head.value}
            artifacts.append(self.repo.write_binary(
                self.path('models_dir') / f"{setup.value}{PARAMS_SUFFIX}", 'model',
                lambda p: save_params(p, run.params), extra,
            ))
            history = ''.join(
                f"{epoch}\t{value:.6f}"
                + (f"\t{run.validation_history[epoch]:.6f}" if run.validation_history else '')
                + '\n'
                for epoch, value in enumerate(run.loss_history)
            )
            artifacts.append(self.repo.write_text(
                self.path('models_dir') / f"{setup.value}.loss.tsv", 'loss-history', history, extra,
            ))
        return artifacts

    def predict(self, setups: Optional[Sequence[TrainingSetup]] = None) -> List[Path]:
        """对测试录音输出阈值化前的分数"""
        _, test = self.split()
        artifacts = []
        for setup in self._setups(setups):
            params_path = self.path('models_dir') / f"{setup.value}{PARAMS_SUFFIX}"
            params = load_params(self.repo.require_file(params_path, 'model'))

            def predict_recording(recording: str) -> Path:
                track = self.read_soft(recording)
                scores = predict(params, self.read_segments(recording, track.duration), self.vocabulary.classes)
                scores.recording = recording
                return self.repo.write_text(
                    self.path('predictions_dir') / setup.value / f"{recording}{PREDICTION_SUFFIX}",
                    'predictions', serialize_scores(scores),
                    {'duration': scores.duration, 'setup': setup.value, 'head': params.head.value},
                )

            artifacts.extend(self.manager.map(predict_recording, test))
        return artifacts

    # ========================================================================
    # evaluate
    # ========================================================================

    def _read_scores(self, setup: TrainingSetup, recording: str) -> ScoreTrack:
        path = self.repo.require_file(
            self.path('predictions_dir') / setup.value / f"{recording}{PREDICTION_SUFFIX}", 'prediction'
        )
        text = read_text(path, 'prediction')
        return parse_scores(text, self.vocabulary.classes, recording=recording, head=setup.head)

    def evaluate(self, setups: Optional[Sequence[TrainingSetup]] = None) -> List[Path]:
        """汇总表: 行 = 训练设置 × 阈值方法，列 = ER / F1 / KLD"""
        _, test = self.split()
        chosen = self._setups(setups)
        references = {r: self.read_soft(r) for r in test}
        scores = {s: {r: self._read_scores(s, r) for r in test} for s in chosen}
        class_table: Optional[ThresholdTable] = None
        eps = self.pipeline.evaluation.kld_eps

        sections = OrderedDict()
        for setup, class_dependent in REPORT_ROWS:
            if setup not in chosen:
                continue
            if class_dependent:
                if class_table is None:
                    class_table = read_thresholds(self.repo.require_file(self.path('thresholds_file'), 'threshold'))
                thresholds = class_table.thresholds
                name = f"{setup.value}@class-dependent"
            else:
                thresholds = 0.5
                name = f"{setup.value}@0.5"

            pairs = []
            for r in test:
                reference, system = references[r], scores[setup][r]
                pairs.append((
                    binarize(reference, thresholds),
                    binarize(system.values, thresholds, classes=system.classes, recording=r),
                ))
            report = segment_eval_many(pairs)

            kld_value = None
            if not class_dependent:
                if setup.loss is LossKind.BCE:
                    target = np.vstack([(references[r].values >= 0.5).astype(np.float64) for r in test])
                else:
                    target = np.vstack([references[r].values for r in test])
                system_scores = np.vstack([scores[setup][r].values for r in test])
                kld_value = kld(system_scores, target, eps)
            sections[name] = (report, kld_value)

        text = self._report_document(sections)
        metrics = report_text(sections)
        reports = self.path('reports_dir')
        artifacts = [
            self.repo.write_text(reports / 'report.txt', 'report', text),
            self.repo.write_text(reports / 'metrics.tsv', 'metrics', metrics),
        ]
        ReportFormatter.print_report(text)
        return artifacts

    @staticmethod
    def _report_document(sections: 'OrderedDict') -> str:
        rows = [(name, report.error_rate, report.f1, kld_value) for name, (report, kld_value) in sections.items()]
        first = next(iter(sections.values()))[0] if sections else None
        parts = [
            "# KLD: Bernoulli D(reference || system), summed over classes, averaged over 1 s segments\n",
            ReportFormatter.format_results_table(rows),
        ]
        if first is not None:
            columns = {name: report.class_f1 for name, (report, _) in sections.items()}
            parts.append('\n')
            parts.append(ReportFormatter.format_class_table(
                [(label, count) for label, count, _ in first.class_f1_table()], columns
            ))
        return ''.join(parts)

    def evaluate_files(self, reference_dir: str, system_dir: str) -> List[Path]:
        """直接比较两个目录中的硬标签文件（按文件名配对）"""
        ref_dir = self.repo.require_dir(reference_dir, 'reference')
        sys_dir = self.repo.require_dir(system_dir, 'system')
        files = self.repo.list(ref_dir, LABEL_SUFFIX)
        if not files:
            raise DataError(f"no hard label files in {ref_dir}")
        classes = self.vocabulary.classes
        pairs: List[Tuple[ThresholdedActivity, ThresholdedActivity]] = []
        for ref_path in files:
            sys_path = self.repo.require_file(sys_dir / ref_path.name, 'system label')
            reference = read_hard_labels(ref_path, self.vocabulary)
            system = read_hard_labels(sys_path, self.vocabulary)
            hints = [read_duration_hint(ref_path), read_duration_hint(sys_path)]
            offsets = [e.offset for e in reference] + [e.offset for e in system]
            duration = max([h for h in hints if h is not None] + offsets + [0])
            pairs.append((rasterize(reference, classes, duration), rasterize(system, classes, duration)))
        report = segment_eval_many(pairs)
        lines = ''.join(f"{line}\n" for line in report_lines(report))
        path = self.repo.write_text(self.path('reports_dir') / 'evaluation.tsv', 'metrics', lines)
        ReportFormatter.print_report(lines)
        return [path]

    # ========================================================================
    # stats
    # ========================================================================

    def stats(self, labels_dir: str, scene: Optional[str] = None) -> List[Path]:
        """
        统计硬标签目录中各场景各类别的事件实例数

        子目录名视为场景；否则按 --scene 或文件名前缀匹配已知场景。
        """
        root = self.repo.require_dir(labels_dir, 'label')
        vocabulary = merged_vocabulary(DEFAULT_VOCABULARIES.values())
        events, scene_of = {}, {}
        directories = [d for d in sorted(root.iterdir()) if d.is_dir()] or [root]
        for directory in directories:
            for path in self.repo.list(directory, LABEL_SUFFIX):
                recording = f"{directory.name}/{path.stem}" if directory != root else path.stem
                events[recording] = parse_hard_labels(read_text(path), vocabulary, recording=recording)
                scene_of[recording] = self._guess_scene(directory, root, path, scene)
        if not events:
            raise DataError(f"no hard label files under {root}")

        stats = count_instances(events, scene_of)
        totals = total_instances(stats)
        expected = total_instances(DATASET_STATISTICS)
        lines = []
        for scene_name in sorted(stats):
            entry = stats[scene_name]
            lines.append(f"files\t{scene_name}\t{entry['files']}")
            for label in sorted(entry['instances']):
                lines.append(f"instances\t{scene_name}|{label}\t{entry['instances'][label]}")
        lines.append(f"files\ttotal\t{sum(e['files'] for e in stats.values())}")
        for label in sorted(totals):
            lines.append(f"instances\ttotal|{label}\t{totals[label]}")
            if label in expected and totals[label] != expected[label]:
                logger.warning(f"'{label}': {totals[label]} instances, released statistics list {expected[label]}")
        text = ''.join(f"{line}\n" for line in lines)
        ReportFormatter.print_report(text)
        return [self.repo.write_text(self.path('reports_dir') / 'stats.tsv', 'stats', text)]

    @staticmethod
    def _guess_scene(directory: Path, root: Path, path: Path, scene: Optional[str]) -> str:
        if scene:
            return scene
        if directory != root:
            return directory.name
        for known in sorted(DEFAULT_VOCABULARIES, key=len, reverse=True):
            if path.stem.startswith(known):
                return known
        return 'unknown'

    # ========================================================================
    # pipeline
    # ========================================================================

    def run_pipeline(self) -> None:
        """simulate → estimate-competence → aggregate → binarize → train → predict → thresholds → evaluate"""
        self.manager.run_stage('simulate', self.simulate)
        self.manager.run_stage('estimate-competence', self.estimate_competence)
        self.manager.run_stage('aggregate', self.aggregate)
        self.manager.run_stage('binarize', self.binarize)
        self.manager.run_stage('train', self.train)
        self.manager.run_stage('predict', self.predict)
        self.manager.run_stage('thresholds', self.thresholds)
        self.manager.run_stage('evaluate', self.evaluate)
