"""
Adam 优化器
"""

from typing import List

import numpy as np

from .network import Gradients, ModelParams


class Adam:
    """
    Adam，带偏差修正

    Args:
        learning_rate: 学习率
        beta1: 一阶矩衰减
        beta2: 二阶矩衰减
        eps: 分母稳定项
    """

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: List[np.ndarray] = []
        self._v: List[np.ndarray] = []

    def step(self, params: ModelParams, grads: Gradients) -> None:
        """原地更新参数"""
        arrays = params.arrays()
        flat_grads = [g for pair in grads for g in pair]
        if not self._m:
            self._m = [np.zeros_like(a) for a in arrays]
            self._v = [np.zeros_like(a) for a in arrays]
        self.step_count += 1
        correction1 = 1.0 - self.beta1 ** self.step_count
        correction2 = 1.0 - self.beta2 ** self.step_count
        for array, grad, m, v in zip(arrays, flat_grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            array -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
