"""
Crowd Simulator - 合成真值、合成标注者与弱标注

用作能力估计、聚合和端到端流水线的测试真值:
1. gen_truth: 每个类别独立的交替更新过程（活动/静默时长均为指数分布），
   在 1 秒片段中点处栅格化
2. gen_annotations: 在重叠窗口上生成弱标注；每个 (标注者, 类别) 以概率 θ_j
   如实作答，否则按 Bernoulli(ξ_j) 乱答
3. synthesize_features: 为模拟录音生成帧级 log-mel 特征，使整个流水线无需音频即可运行

随机数使用 numpy Generator(PCG64)，由 64 位种子（或 SeedSequence）确定。
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DataError, UsageError
from ..core.label_models import Assignment, ClassVocabulary, ThresholdedActivity, WeakAnnotationSet
from ..features.mel import FeatureMatrix, frame_count
from ..labels.vocabulary import get_vocabulary
from ..schemas.config_schemas import FeatureConfig, SimulatorConfig

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class Annotator:
    """标注者: 能力 θ ∈ (0,1]，乱答时选"存在"的概率 ξ ∈ [0,1]"""
    id: str
    competence: float
    spam_bias: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.competence <= 1.0:
            raise DataError(f"competence of annotator '{self.id}' must lie in [0, 1]")
        if not 0.0 <= self.spam_bias <= 1.0:
            raise DataError(f"spam bias of annotator '{self.id}' must lie in [0, 1]")


@dataclass(eq=False)
class TrueActivityTrack:
    """模拟真值: active[t, c] ∈ {0, 1}"""
    recording: str
    duration: int
    classes: Tuple[str, ...]
    active: np.ndarray

    def as_activity(self) -> ThresholdedActivity:
        return ThresholdedActivity(self.recording, self.classes, self.active.copy())

    def weak_labels(self, window: int, hop: int) -> np.ndarray:
        """每个窗口的真实弱标签 (n_windows × n_classes)：窗口内任一片段活动即为 1"""
        starts = window_starts(self.duration, window, hop)
        return np.array([self.active[s:s + window].any(axis=0) for s in starts], dtype=bool).reshape(
            len(starts), len(self.classes)
        )


def window_starts(duration: int, window: int, hop: int) -> List[int]:
    """对齐步长网格的窗口起点，丢弃最后不完整的窗口"""
    if duration < window:
        return []
    return list(range(0, duration - window + 1, hop))


def resolve_classes(config: SimulatorConfig) -> Tuple[str, ...]:
    if config.classes:
        return ClassVocabulary(config.scene, tuple(config.classes)).classes
    return get_vocabulary(config.scene).classes


def class_processes(config: SimulatorConfig, classes: Sequence[str]) -> Dict[str, Tuple[float, float]]:
    """
    每个类别的 (到达率, 平均时长)

    稀有类别的到达率按 p = r·d / (1 + r·d) 反解，使其平稳活动比例等于 rare_prevalence。
    """
    processes = {}
    for name in classes:
        mean_duration = config.class_durations.get(name, config.mean_duration)
        if name in config.rare_classes:
            p = config.rare_prevalence
            rate = p / (mean_duration * (1.0 - p))
        else:
            rate = config.class_rates.get(name, config.event_rate)
        if rate < 0 or mean_duration <= 0:
            raise UsageError(f"invalid process for class '{name}': rate={rate}, mean_duration={mean_duration}")
        processes[name] = (rate, mean_duration)
    return processes


def stationary_fraction(rate: float, mean_duration: float) -> float:
    return rate * mean_duration / (1.0 + rate * mean_duration)


def _renewal_column(rng: np.random.Generator, duration: int, rate: float, mean_duration: float) -> np.ndarray:
    column = np.zeros(duration, dtype=bool)
    if rate <= 0:
        return column
    midpoints = np.arange(duration) + 0.5
    active = rng.random() < stationary_fraction(rate, mean_duration)
    time = 0.0
    while time < duration:
        length = rng.exponential(mean_duration if active else 1.0 / rate)
        if active:
            column |= (midpoints >= time) & (midpoints < time + length)
        time += length
        active = not active
    return column


def gen_truth(
    config: SimulatorConfig,
    seed: Seed,
    recording: str = 'sim',
) -> TrueActivityTrack:
    """
    生成模拟真值

    Args:
        config: 模拟器配置（duration, classes, 到达率, 平均时长, 稀有类别比例）
        seed: 64 位种子或 SeedSequence
        recording: 录音 ID

    Raises:
        UsageError: duration < window
    """
    if config.duration < config.window:
        raise UsageError(f"duration {config.duration} is shorter than the annotation window {config.window}")
    classes = resolve_classes(config)
    processes = class_processes(config, classes)
    rng = np.random.default_rng(seed)
    active = np.zeros((config.duration, len(classes)), dtype=bool)
    for c, name in enumerate(classes):
        rate, mean_duration = processes[name]
        active[:, c] = _renewal_column(rng, config.duration, rate, mean_duration)
    return TrueActivityTrack(recording, config.duration, classes, active)


def make_pool(
    n: int,
    seed: Seed,
    theta_range: Tuple[float, float] = (0.6, 1.0),
    xi_range: Tuple[float, float] = (0.3, 0.7),
) -> List[Annotator]:
    """按均匀分布抽取标注者池"""
    if n < 1:
        raise UsageError("annotator pool must not be empty")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(theta_range[0], theta_range[1], size=n)
    xis = rng.uniform(xi_range[0], xi_range[1], size=n)
    width = len(str(n - 1))
    return [
        Annotator(f"A{j:0{width}d}", float(theta), float(xi))
        for j, (theta, xi) in enumerate(zip(thetas, xis))
    ]


def gen_annotations(
    truth: TrueActivityTrack,
    pool: Sequence[Annotator],
    k: int,
    seed: Seed,
    window: int = 10,
    hop: int = 1,
    detectability: Optional[Mapping[str, float]] = None,
) -> WeakAnnotationSet:
    """
    在重叠窗口上生成弱标注

    每个窗口随机抽取 k 个不同的标注者；每个 (标注者, 类别) 以概率 θ_j 如实作答
    （真实弱标签，且仅以 detectability 的概率察觉到该类别），否则按 Bernoulli(ξ_j) 作答。
    """
    if k < 1:
        raise UsageError(f"annotators per window must be >= 1, got {k}")
    if not pool:
        raise UsageError("annotator pool must not be empty")
    if k > len(pool):
        logger.warning(f"k={k} exceeds pool size {len(pool)}; using {len(pool)} annotators per window")
        k = len(pool)

    detect = np.array([(detectability or {}).get(name, 1.0) for name in truth.classes])
    thetas = np.array([a.competence for a in pool])
    xis = np.array([a.spam_bias for a in pool])
    weak = truth.weak_labels(window, hop)
    starts = window_starts(truth.duration, window, hop)
    rng = np.random.default_rng(seed)

    assignments = []
    n_classes = len(truth.classes)
    for w, start in enumerate(starts):
        chosen = rng.choice(len(pool), size=k, replace=False)
        draws = rng.random((k, 3, n_classes))
        faithful = draws[:, 0, :] < thetas[chosen, np.newaxis]
        noticed = weak[w][np.newaxis, :] & (draws[:, 1, :] < detect[np.newaxis, :])
        spam = draws[:, 2, :] < xis[chosen, np.newaxis]
        votes = np.where(faithful, noticed, spam)
        for row, j in enumerate(chosen):
            selected = frozenset(truth.classes[c] for c in np.flatnonzero(votes[row]))
            assignments.append(Assignment(pool[j].id, start, selected))

    return WeakAnnotationSet(
        recording=truth.recording,
        classes=truth.classes,
        window=window,
        hop=hop,
        assignments=assignments,
        duration=truth.duration,
    )


def class_envelopes(
    classes: Sequence[str],
    n_bands: int,
    seed: Seed = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    每个类别的频谱包络（高斯形状）和增益

    Returns:
        (envelopes: n_classes × n_bands, gains: n_classes)
    """
    rng = np.random.default_rng(seed)
    bands = np.arange(n_bands)
    envelopes = np.empty((len(classes), n_bands))
    centers = rng.uniform(4, n_bands - 4, size=len(classes))
    widths = rng.uniform(2.0, 6.0, size=len(classes))
    gains = rng.uniform(5.0, 20.0, size=len(classes))
    for c in range(len(classes)):
        envelopes[c] = np.exp(-0.5 * ((bands - centers[c]) / widths[c]) ** 2)
    return envelopes, gains


def synthesize_features(
    truth: TrueActivityTrack,
    config: FeatureConfig,
    seed: Seed,
    envelope_seed: Seed = 0,
) -> FeatureMatrix:
    """
    为模拟录音生成帧级 log-mel 特征

    功率 = 对数正态噪声底 + Σ_c active_c · gain_c · envelope_c · 对数正态抖动。
    类别包络只由 envelope_seed 决定，所有录音共享同一组类别"声音"。
    """
    hop = config.hop_samples
    n_frames = frame_count(truth.duration * config.sample_rate, config.n_fft, hop)
    if n_frames < 1:
        raise UsageError(f"recording '{truth.recording}' is too short for one analysis frame")
    envelopes, gains = class_envelopes(truth.classes, config.n_mels, envelope_seed)
    rng = np.random.default_rng(seed)

    segment_of = np.minimum((np.arange(n_frames) * hop) // config.sample_rate, truth.duration - 1)
    frame_active = truth.active[segment_of].astype(np.float64)
    jitter = np.exp(rng.normal(0.0, 0.3, size=(n_frames, len(truth.classes))))
    power = np.exp(rng.normal(0.0, 0.5, size=(n_frames, config.n_mels)))
    power += (frame_active * jitter * gains) @ envelopes
    return FeatureMatrix(
        values=np.log(power + config.log_floor),
        sample_rate=config.sample_rate,
        hop_samples=hop,
        n_fft=config.n_fft,
        duration_seconds=float(truth.duration),
        recording=truth.recording,
    )


def simulate_recordings(
    config: SimulatorConfig,
    seed: int,
) -> Tuple[List[Annotator], List[TrueActivityTrack], List[WeakAnnotationSet]]:
    """
    按配置模拟多段录音

    种子由 SeedSequence(seed) 派生: 标注者池、每段录音的真值和标注各一条独立子流。
    """
    children = np.random.SeedSequence(seed).spawn(1 + 2 * config.n_recordings)
    pool = make_pool(
        config.n_annotators, children[0],
        theta_range=(config.theta_low, config.theta_high),
        xi_range=(config.xi_low, config.xi_high),
    )
    width = len(str(config.n_recordings - 1))
    truths, annotation_sets = [], []
    for i in range(config.n_recordings):
        recording = f"{config.scene}_{i:0{width}d}"
        truth = gen_truth(config, children[1 + 2 * i], recording=recording)
        annotations = gen_annotations(
            truth, pool, config.annotators_per_window, children[2 + 2 * i],
            window=config.window, hop=config.hop, detectability=config.detectability,
        )
        truths.append(truth)
        annotation_sets.append(annotations)
    logger.info(f"Simulated {config.n_recordings} recordings with {len(pool)} annotators")
    return pool, truths, annotation_sets


def coverage_counts(duration: int, window: int, hop: int) -> np.ndarray:
    """每个 1 秒片段被多少个窗口覆盖"""
    counts = np.zeros(duration, dtype=int)
    for start in window_starts(duration, window, hop):
        counts[start:start + window] += 1
    return counts
