"""
Setups - 训练配置与阈值方法枚举
"""

from enum import Enum


class Head(str, Enum):
    """输出层类型"""
    SIGMOID = "sigmoid"
    LINEAR = "linear"


class LossKind(str, Enum):
    """损失函数类型"""
    BCE = "bce"
    MSE = "mse"


class TrainingSetup(str, Enum):
    """
    三种训练设置，每种隐含 (标签来源, 损失, 输出层)

    - H_BCE_SIG: 硬标签 + BCE + sigmoid
    - S_BCE_SIG: 软标签 + BCE + sigmoid
    - S_MSE_LIN: 软标签 + MSE + linear
    """
    H_BCE_SIG = "H_BCE_SIG"
    S_BCE_SIG = "S_BCE_SIG"
    S_MSE_LIN = "S_MSE_LIN"

    @property
    def head(self) -> Head:
        return Head.LINEAR if self is TrainingSetup.S_MSE_LIN else Head.SIGMOID

    @property
    def loss(self) -> LossKind:
        return LossKind.MSE if self is TrainingSetup.S_MSE_LIN else LossKind.BCE

    @property
    def uses_soft_labels(self) -> bool:
        return self is not TrainingSetup.H_BCE_SIG


class ThresholdMethod(str, Enum):
    """阈值方法"""
    FIXED = "FIXED_0.5"
    TRIMMED_MIDRANGE = "TRIMMED_MIDRANGE"


class RunStatus(str, Enum):
    """阶段运行状态"""
    PENDING = 'pending'
    RUNNING = 'running'
    COMPLETED = 'completed'
    FAILED = 'failed'
