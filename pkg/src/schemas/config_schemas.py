"""
Config Schemas - 流水线配置文件模型

配置文件为 YAML，加载后由这里的模型校验。每个阶段对应一个子模型，
数值范围约束直接写在 Field 上。
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import Field, field_validator, model_validator

from ..core.setups import ThresholdMethod, TrainingSetup
from .common import StrictModel


class PathsConfig(StrictModel):
    """文件路径配置，未指定的目录默认放在 work_dir 下"""
    work_dir: str = Field(default="runs/default", description="工作目录")
    annotations_dir: Optional[str] = Field(default=None, description="弱标注文件目录")
    truth_dir: Optional[str] = Field(default=None, description="模拟真值（硬标签格式）目录")
    audio_dir: Optional[str] = Field(default=None, description="WAV 音频目录")
    features_dir: Optional[str] = Field(default=None, description="特征文件目录")
    soft_labels_dir: Optional[str] = Field(default=None, description="软标签目录")
    hard_labels_dir: Optional[str] = Field(default=None, description="硬标签目录")
    models_dir: Optional[str] = Field(default=None, description="模型参数目录")
    predictions_dir: Optional[str] = Field(default=None, description="预测输出目录")
    reports_dir: Optional[str] = Field(default=None, description="报告目录")
    competence_file: Optional[str] = Field(default=None, description="能力表文件")
    thresholds_file: Optional[str] = Field(default=None, description="阈值表文件")
    vocabulary_file: Optional[str] = Field(default=None, description="词表 YAML 文件")

    def resolve(self, name: str) -> Path:
        """解析路径；未配置时使用 work_dir 下的默认名称"""
        defaults = {
            'annotations_dir': 'annotations',
            'truth_dir': 'truth',
            'audio_dir': 'audio',
            'features_dir': 'features',
            'soft_labels_dir': 'soft',
            'hard_labels_dir': 'hard',
            'models_dir': 'models',
            'predictions_dir': 'predictions',
            'reports_dir': 'reports',
            'competence_file': 'competence.tsv',
            'thresholds_file': 'thresholds.tsv',
        }
        value = getattr(self, name)
        if value:
            return Path(value)
        if name not in defaults:
            raise KeyError(name)
        return Path(self.work_dir) / defaults[name]


class SimulatorConfig(StrictModel):
    """众包模拟器配置"""
    n_recordings: int = Field(default=10, ge=1, description="模拟录音数量")
    duration: int = Field(default=600, ge=1, description="每段录音时长（秒）")
    window: int = Field(default=10, ge=1, description="标注窗口长度 W（秒）")
    hop: int = Field(default=1, ge=1, description="标注步长 H（秒）")
    scene: str = Field(default="residential_area", description="场景")
    classes: Optional[List[str]] = Field(default=None, description="类别列表，默认取场景词表")
    event_rate: float = Field(default=0.02, ge=0, description="事件到达率（每秒）")
    mean_duration: float = Field(default=8.0, gt=0, description="事件平均时长（秒）")
    class_rates: Dict[str, float] = Field(default_factory=dict, description="按类别覆盖到达率")
    class_durations: Dict[str, float] = Field(default_factory=dict, description="按类别覆盖平均时长")
    rare_classes: List[str] = Field(default_factory=list, description="稀有类别")
    rare_prevalence: float = Field(default=0.05, gt=0, lt=1, description="稀有类别的平稳活动比例")
    detectability: Dict[str, float] = Field(default_factory=dict, description="按类别的可察觉概率")
    n_annotators: int = Field(default=20, ge=1, description="标注者池大小")
    theta_low: float = Field(default=0.6, ge=0, le=1)
    theta_high: float = Field(default=1.0, ge=0, le=1)
    xi_low: float = Field(default=0.3, ge=0, le=1)
    xi_high: float = Field(default=0.7, ge=0, le=1)
    annotators_per_window: int = Field(default=5, ge=1, description="每个窗口的标注者数 k")

    @model_validator(mode='after')
    def _check_grid(self) -> 'SimulatorConfig':
        if self.window % self.hop != 0:
            raise ValueError(f"window {self.window} must be a multiple of hop {self.hop}")
        if self.theta_low > self.theta_high or self.xi_low > self.xi_high:
            raise ValueError("annotator parameter ranges must satisfy low <= high")
        for name, value in self.detectability.items():
            if not 0 < value <= 1:
                raise ValueError(f"detectability of '{name}' must lie in (0, 1]")
        return self


class CompetenceConfig(StrictModel):
    """EM 能力估计配置"""
    iterations: int = Field(default=50, ge=1)
    restarts: int = Field(default=10, ge=1)
    smoothing: float = Field(default=0.1, ge=0)
    per_scene: bool = Field(default=False, description="按场景分别估计")
    workers: int = Field(default=1, ge=1, description="并行重启的线程数")
    theta_min: float = Field(default=0.01, gt=0, lt=1)
    theta_max: float = Field(default=0.99, gt=0, lt=1)


class AggregationConfig(StrictModel):
    """软标签聚合配置"""
    weighting: Literal['competence', 'uniform'] = Field(default='competence')
    dedup_annotators: bool = Field(default=False, description="同一标注者的多个窗口合并为一个意见")


class FeatureConfig(StrictModel):
    """特征提取配置"""
    sample_rate: int = Field(default=44100, gt=0)
    n_fft: int = Field(default=2048, gt=0)
    n_mels: int = Field(default=64, gt=0)
    f_min: float = Field(default=50.0, ge=0)
    f_max: float = Field(default=14000.0, gt=0)
    hop_seconds: float = Field(default=0.02, gt=0)
    log_floor: float = Field(default=1e-10, gt=0)

    @model_validator(mode='after')
    def _check_band(self) -> 'FeatureConfig':
        if self.f_min >= self.f_max:
            raise ValueError("f_min must be lower than f_max")
        if self.f_max > self.sample_rate / 2:
            raise ValueError(f"f_max {self.f_max} exceeds Nyquist {self.sample_rate / 2}")
        return self

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_seconds * self.sample_rate))


class TrainingConfig(StrictModel):
    """分类器训练配置"""
    setups: List[TrainingSetup] = Field(
        default_factory=lambda: [TrainingSetup.H_BCE_SIG, TrainingSetup.S_BCE_SIG, TrainingSetup.S_MSE_LIN]
    )
    hidden: List[int] = Field(default_factory=lambda: [64, 64])
    epochs: int = Field(default=50, ge=0)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    standardize: bool = Field(default=True, description="训练集上标准化输入并折叠进第一层")
    validation_fraction: float = Field(default=0.2, ge=0, lt=1, description="按录音划分的验证集比例")

    @field_validator('hidden')
    @classmethod
    def _check_hidden(cls, value: List[int]) -> List[int]:
        if any(width < 1 for width in value):
            raise ValueError("hidden layer widths must be >= 1")
        return value


class ThresholdConfig(StrictModel):
    """阈值配置"""
    method: ThresholdMethod = Field(default=ThresholdMethod.TRIMMED_MIDRANGE)
    fixed_threshold: float = Field(default=0.5, gt=0, lt=1)
    trim: float = Field(default=0.10, ge=0, lt=0.5)
    positives_only: bool = Field(default=True, description="只用非零软标签计算中程数")


class EvaluationConfig(StrictModel):
    """评估配置"""
    kld_eps: float = Field(default=1e-7, gt=0, lt=0.5)


class PipelineConfig(StrictModel):
    """完整流水线配置"""
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="64 位随机种子")
    log_level: str = Field(default="INFO")
    paths: PathsConfig = Field(default_factory=PathsConfig)
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    competence: CompetenceConfig = Field(default_factory=CompetenceConfig)
    aggregation: AggregationConfig = Field(default_factory=AggregationConfig)
    features: FeatureConfig = Field(default_factory=FeatureConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    thresholds: ThresholdConfig = Field(default_factory=ThresholdConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
