"""
Network - 两层隐藏层的前馈多标签分类器

结构: input → hidden(ReLU) → hidden(ReLU) → output，输出层为 sigmoid 或线性。
梯度为解析反向传播，对 BCE 的截断区域 [1e-7, 1 - 1e-7] 精确处理
（截断生效处梯度为 0，与截断后的损失一致）。
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import DataError, NumericError
from ..core.setups import Head, LossKind

BCE_CLAMP = 1e-7


@dataclass
class Layer:
    """全连接层: z = x @ weights + bias"""
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)

    @property
    def fan_in(self) -> int:
        return int(self.weights.shape[0])

    @property
    def fan_out(self) -> int:
        return int(self.weights.shape[1])


@dataclass
class ModelParams:
    """网络参数"""
    layers: List[Layer]
    head: Head = Head.SIGMOID

    def __post_init__(self):
        self.head = Head(self.head)
        if not self.layers:
            raise DataError("model must have at least one layer")
        previous = None
        for i, layer in enumerate(self.layers):
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.fan_out,):
                raise DataError(f"layer {i} has inconsistent shapes {layer.weights.shape} / {layer.bias.shape}")
            if previous is not None and layer.fan_in != previous:
                raise DataError(f"layer {i} expects {layer.fan_in} inputs but previous layer emits {previous}")
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
                raise NumericError(f"layer {i} contains non-finite parameters")
            previous = layer.fan_out

    @property
    def n_inputs(self) -> int:
        return self.layers[0].fan_in

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].fan_out

    @property
    def dims(self) -> List[int]:
        return [self.n_inputs] + [layer.fan_out for layer in self.layers]

    def copy(self) -> 'ModelParams':
        return ModelParams([Layer(l.weights.copy(), l.bias.copy()) for l in self.layers], self.head)

    def arrays(self) -> List[np.ndarray]:
        """按声明顺序的参数数组（weights, bias, weights, bias, ...）"""
        return [a for layer in self.layers for a in (layer.weights, layer.bias)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        mine, theirs = self.arrays(), other.arrays()
        return (
            self.head == other.head
            and len(mine) == len(theirs)
            and all(np.array_equal(a, b) for a, b in zip(mine, theirs))
        )


Gradients = List[Tuple[np.ndarray, np.ndarray]]


def init_params(
    n_inputs: int,
    n_outputs: int,
    hidden: Sequence[int] = (64, 64),
    head: Head = Head.SIGMOID,
    rng: Optional[np.random.Generator] = None,
) -> ModelParams:
    """Glorot 均匀初始化: W ~ U(−s, s)，s = sqrt(6 / (fan_in + fan_out))，偏置为 0"""
    rng = rng if rng is not None else np.random.default_rng(0)
    dims = [n_inputs, *hidden, n_outputs]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(Layer(rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return ModelParams(layers, Head(head))


def _activate_head(z: np.ndarray, head: Head) -> np.ndarray:
    return expit(z) if head is Head.SIGMOID else z


def _forward_pass(params: ModelParams, x: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """返回每层的输入激活和最终输出"""
    activations = [x]
    h = x
    for layer in params.layers[:-1]:
        h = np.maximum(h @ layer.weights + layer.bias, 0.0)
        activations.append(h)
    last = params.layers[-1]
    return activations, _activate_head(h @ last.weights + last.bias, params.head)


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """
    前向计算

    Args:
        params: 网络参数
        x: 单个特征向量 (n_inputs,) 或批量 (batch, n_inputs)

    Raises:
        DataError: 维度不匹配
        NumericError: 输入包含非有限值
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[np.newaxis, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.n_inputs:
        raise DataError(f"expected inputs of width {params.n_inputs}, got shape {x.shape}")
    if not np.all(np.isfinite(batch)):
        raise NumericError("input features contain non-finite values")
    _, outputs = _forward_pass(params, batch)
    return outputs[0] if single else outputs


def loss(outputs: np.ndarray, targets: np.ndarray, kind: LossKind) -> float:
    """
    平均损失（对类别和批量取均值）

    BCE 先将输出截断到 [1e-7, 1 - 1e-7]。
    """
    y = np.asarray(outputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if y.shape != t.shape:
        raise DataError(f"outputs {y.shape} and targets {t.shape} differ in shape")
    if LossKind(kind) is LossKind.MSE:
        return float(np.mean((y - t) ** 2))
    y = np.clip(y, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(t * np.log(y) + (1.0 - t) * np.log1p(-y)))


def _output_delta(params: ModelParams, outputs: np.ndarray, targets: np.ndarray, kind: LossKind) -> np.ndarray:
    """损失对输出层预激活 z 的梯度"""
    n = outputs.size
    kind = LossKind(kind)
    if kind is LossKind.MSE:
        d_out = 2.0 * (outputs - targets) / n
    else:
        interior = (outputs > BCE_CLAMP) & (outputs < 1.0 - BCE_CLAMP)
        if params.head is Head.SIGMOID:
            return np.where(interior, outputs - targets, 0.0) / n
        with np.errstate(divide='ignore', invalid='ignore'):
            d_out = np.where(interior, (outputs - targets) / (outputs * (1.0 - outputs)), 0.0) / n
    if params.head is Head.SIGMOID:
        return d_out * outputs * (1.0 - outputs)
    return d_out


def gradients(params: ModelParams, x: np.ndarray, targets: np.ndarray, kind: LossKind) -> Gradients:
    """
    平均损失对所有参数的解析梯度

    Returns:
        与 params.layers 对应的 [(dW, db), ...]
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    activations, outputs = _forward_pass(params, x)
    delta = _output_delta(params, outputs, targets, kind)

    grads: Gradients = []
    for i in range(len(params.layers) - 1, -1, -1):
        a_in = activations[i]
        grads.append((a_in.T @ delta, delta.sum(axis=0)))
        if i > 0:
            delta = (delta @ params.layers[i].weights.T) * (a_in > 0.0)
    grads.reverse()
    return grads


def fold_standardization(params: ModelParams, mean: np.ndarray, scale: np.ndarray) -> ModelParams:
    """
    把输入标准化 (x − mean) / scale 折叠进第一层，使参数直接作用于原始特征
    """
    folded = params.copy()
    first = folded.layers[0]
    scaled = first.weights / scale[:, np.newaxis]
    first.bias = first.bias - mean @ scaled
    first.weights = scaled
    return folded
