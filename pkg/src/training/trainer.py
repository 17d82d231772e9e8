"""
Trainer - 三种训练设置下的小批量训练与预测

- H_BCE_SIG: 在 0.5 处二值化的硬标签 + BCE + sigmoid
- S_BCE_SIG: 软标签 + BCE + sigmoid
- S_MSE_LIN: 软标签 + MSE + 线性输出

训练完全由种子决定: 初始化和每个 epoch 的打乱顺序都来自同一个 Generator。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DataError, LabelParseError, NumericError
from ..core.label_models import SoftLabelTrack
from ..core.setups import Head, TrainingSetup
from ..features.mel import SegmentFeatures
from ..labels.labelio import TextSource, iter_records, parse_whole_seconds
from ..schemas.config_schemas import TrainingConfig
from .network import ModelParams, fold_standardization, forward, gradients, init_params, loss
from .optimizer import Adam

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SegmentDataset:
    """片段特征矩阵与目标矩阵"""
    features: np.ndarray
    targets: np.ndarray
    classes: Tuple[str, ...]
    recordings: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.classes = tuple(self.classes)
        if self.features.ndim != 2 or self.targets.ndim != 2:
            raise DataError("dataset features and targets must be 2-D")
        if self.features.shape[0] != self.targets.shape[0]:
            raise DataError(
                f"{self.features.shape[0]} feature rows but {self.targets.shape[0]} target rows"
            )
        if self.targets.shape[1] != len(self.classes):
            raise DataError(f"targets have {self.targets.shape[1]} columns for {len(self.classes)} classes")
        if self.targets.size and (self.targets.min() < 0.0 or self.targets.max() > 1.0):
            raise DataError("targets must lie in [0, 1]")

    def __len__(self) -> int:
        return int(self.features.shape[0])


def targets_for_setup(track: SoftLabelTrack, setup: TrainingSetup) -> np.ndarray:
    """H_* 使用在 0.5 处二值化（>= 0.5）的标签，S_* 直接使用软标签"""
    if TrainingSetup(setup).uses_soft_labels:
        return track.values.copy()
    return (track.values >= 0.5).astype(np.float64)


def build_dataset(
    segments: Sequence[SegmentFeatures],
    tracks: Sequence[SoftLabelTrack],
    setup: TrainingSetup,
) -> SegmentDataset:
    """
    按录音对齐片段特征与软标签，截取两者共同的片段数

    Raises:
        DataError: 录音数量不一致或类别列表不一致
    """
    if len(segments) != len(tracks):
        raise DataError(f"{len(segments)} feature files but {len(tracks)} label tracks")
    if not tracks:
        raise DataError("training set is empty")
    classes = tracks[0].classes
    features, targets, recordings = [], [], []
    for seg, track in zip(segments, tracks):
        if track.classes != classes:
            raise DataError(f"label track '{track.recording}' uses a different class list")
        n = min(seg.n_segments, track.duration)
        if n < track.duration:
            logger.warning(f"'{track.recording}': features cover {seg.n_segments} s of {track.duration} s of labels")
        features.append(seg.values[:n])
        targets.append(targets_for_setup(track, setup)[:n])
        recordings.extend([track.recording] * n)
    return SegmentDataset(np.vstack(features), np.vstack(targets), classes, recordings)


@dataclass
class TrainRun:
    """训练结果"""
    params: ModelParams
    setup: TrainingSetup
    seed: int
    loss_history: List[float] = field(default_factory=list)
    validation_history: List[float] = field(default_factory=list)
    initial_loss: float = float('nan')
    config: Dict[str, object] = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else self.initial_loss


def _standardizer(features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    return mean, np.where(scale > 0.0, scale, 1.0)


def train(
    dataset: SegmentDataset,
    setup: TrainingSetup,
    config: Optional[TrainingConfig] = None,
    seed: int = 0,
    validation: Optional[SegmentDataset] = None,
) -> TrainRun:
    """
    训练分类器

    Args:
        dataset: 训练集（目标已按 setup 准备）
        setup: 训练设置，决定输出层与损失
        config: epochs / batch_size / Adam 参数 / 隐藏层宽度 / 是否标准化
        seed: 64 位种子
        validation: 可选验证集，每个 epoch 记录一次验证损失

    epochs = 0 时返回的参数就是初始化参数（不做标准化折叠）。

    Raises:
        DataError: 训练集为空
        NumericError: 损失出现 NaN 或无穷
    """
    config = config or TrainingConfig()
    setup = TrainingSetup(setup)
    if len(dataset) == 0:
        raise DataError("training set is empty")

    rng = np.random.default_rng(seed)
    params = init_params(dataset.features.shape[1], len(dataset.classes), config.hidden, setup.head, rng)
    if config.standardize:
        mean, scale = _standardizer(dataset.features)
        x = (dataset.features - mean) / scale
        x_val = (validation.features - mean) / scale if validation is not None and len(validation) else None
    else:
        x = dataset.features
        x_val = validation.features if validation is not None and len(validation) else None
    t = dataset.targets

    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    initial_loss = loss(forward(params, x), t, setup.loss)
    run = TrainRun(params=params, setup=setup, seed=int(seed), initial_loss=initial_loss,
                   config=config.model_dump(mode='json'))

    n = len(dataset)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            optimizer.step(params, gradients(params, x[batch], t[batch], setup.loss))
        epoch_loss = loss(forward(params, x), t, setup.loss)
        if not np.isfinite(epoch_loss):
            raise NumericError(
                f"{setup.value}: loss became non-finite at epoch {epoch} "
                f"(previous loss {run.final_loss:.6g}, learning rate {config.learning_rate})"
            )
        run.loss_history.append(epoch_loss)
        if x_val is not None:
            run.validation_history.append(loss(forward(params, x_val), validation.targets, setup.loss))
        logger.debug(f"{setup.value} epoch {epoch}: loss={epoch_loss:.6f}")

    if config.standardize and config.epochs > 0:
        run.params = fold_standardization(params, mean, scale)
    logger.info(
        f"Trained {setup.value} for {config.epochs} epochs on {n} segments: "
        f"loss {initial_loss:.4f} -> {run.final_loss:.4f}"
    )
    return run


@dataclass(eq=False)
class ScoreTrack:
    """系统输出分数（阈值化前）"""
    recording: str
    classes: Tuple[str, ...]
    values: np.ndarray
    head: Head = Head.SIGMOID

    @property
    def duration(self) -> int:
        return int(self.values.shape[0])

    def as_soft_track(self) -> SoftLabelTrack:
        return SoftLabelTrack(self.recording, self.duration, self.classes, np.clip(self.values, 0.0, 1.0))


def predict(
    params: ModelParams,
    segments: SegmentFeatures,
    classes: Sequence[str],
) -> ScoreTrack:
    """逐片段预测分数；线性输出保持原值，仅在导出 KLD 时截断"""
    classes = tuple(classes)
    if params.n_outputs != len(classes):
        raise DataError(f"model emits {params.n_outputs} scores but {len(classes)} classes were given")
    if segments.n_segments == 0:
        values = np.zeros((0, len(classes)))
    else:
        values = forward(params, segments.values)
    return ScoreTrack(segments.recording, classes, values, params.head)


# ============================================================================
# 预测文件
# ============================================================================

def serialize_scores(scores: ScoreTrack) -> str:
    """<onset>\\t<offset>\\t<label>\\t<score>，列出全部 (片段, 类别)，线性输出不截断"""
    order = sorted(range(len(scores.classes)), key=lambda c: scores.classes[c])
    return ''.join(
        f"{t}\t{t + 1}\t{scores.classes[c]}\t{scores.values[t, c]:.6f}\n"
        for t in range(scores.duration)
        for c in order
    )


def parse_scores(
    source: TextSource,
    classes: Sequence[str],
    recording: str = '',
    head: Head = Head.SIGMOID,
) -> ScoreTrack:
    """
    Raises:
        LabelParseError: 字段数错误、分数非有限或缺项
    """
    classes = tuple(classes)
    column = {c: i for i, c in enumerate(classes)}
    entries: Dict[Tuple[int, int], float] = {}
    for line_number, fields in iter_records(source):
        if len(fields) != 4:
            raise LabelParseError(f"expected 4 fields (onset, offset, label, score), got {len(fields)}", line_number)
        onset = parse_whole_seconds(fields[0], line_number)
        if fields[2] not in column:
            raise LabelParseError(f"unknown label '{fields[2]}'", line_number, label=fields[2])
        try:
            value = float(fields[3])
        except ValueError:
            raise LabelParseError(f"score '{fields[3]}' is not a number", line_number) from None
        if not np.isfinite(value):
            raise LabelParseError(f"score {value} is not finite", line_number)
        entries[(onset, column[fields[2]])] = value
    duration = max((t for t, _ in entries), default=-1) + 1
    if len(entries) != duration * len(classes):
        raise LabelParseError(f"score file of '{recording}' does not cover every segment and class")
    values = np.zeros((duration, len(classes)))
    for (t, c), value in entries.items():
        values[t, c] = value
    return ScoreTrack(recording, classes, values, Head(head))
