"""
Gradcheck - 中心差分梯度检查
"""

import logging
from typing import List

import numpy as np

from ..core.setups import LossKind
from .network import Gradients, ModelParams, forward, gradients, loss

logger = logging.getLogger(__name__)


def finite_difference_gradients(
    params: ModelParams,
    x: np.ndarray,
    targets: np.ndarray,
    kind: LossKind,
    eps: float = 1e-5,
) -> Gradients:
    """
    对每个参数做中心差分 (L(p + ε) − L(p − ε)) / 2ε

    ReLU 在 0 处不可导，预激活落在 0 附近时两者不可比。
    """
    perturbed = params.copy()
    numeric: List[np.ndarray] = []
    for array in perturbed.arrays():
        grad = np.zeros_like(array)
        flat, out = array.reshape(-1), grad.reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + eps
            upper = loss(forward(perturbed, x), targets, kind)
            flat[k] = saved - eps
            lower = loss(forward(perturbed, x), targets, kind)
            flat[k] = saved
            out[k] = (upper - lower) / (2.0 * eps)
        numeric.append(grad)
    return [(numeric[i], numeric[i + 1]) for i in range(0, len(numeric), 2)]


def max_relative_error(analytic: Gradients, numeric: Gradients, floor: float = 1e-6) -> float:
    """max |a − n| / max(|a|, |n|, floor)"""
    worst = 0.0
    for pair_a, pair_n in zip(analytic, numeric):
        for a, n in zip(pair_a, pair_n):
            denominator = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            worst = max(worst, float(np.max(np.abs(a - n) / denominator)))
    return worst


def check_gradients(
    params: ModelParams,
    x: np.ndarray,
    targets: np.ndarray,
    kind: LossKind,
    eps: float = 1e-5,
) -> float:
    """返回解析梯度与数值梯度的最大相对误差"""
    error = max_relative_error(
        gradients(params, x, targets, kind),
        finite_difference_gradients(params, x, targets, kind, eps),
    )
    logger.debug(f"Gradient check ({LossKind(kind).value}, head={params.head.value}): max relative error {error:.3e}")
    return error
