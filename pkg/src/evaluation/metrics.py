"""
Metrics - 1 秒片段级 ER / F1 与 KL 散度

片段 k 上:
    S(k) = min(FN(k), FP(k))
    D(k) = max(0, FN(k) − FP(k))
    I(k) = max(0, FP(k) − FN(k))
    ER = (ΣS + ΣD + ΣI) / ΣN_ref
    F1 = 2TP / (2TP + FP + FN)，分母为 0 时记为 0

KLD 为伯努利 KL 散度 D(ref ‖ sys)，对类别求和、对片段取均值；
系统分数截断到 [ε, 1 − ε]，参考标签不截断（0·ln0 = 0）。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import xlogy

from ..core.errors import DataError
from ..core.label_models import ThresholdedActivity

logger = logging.getLogger(__name__)


def _f1(tp: float, fp: float, fn: float) -> float:
    denominator = 2 * tp + fp + fn
    return float(2 * tp / denominator) if denominator > 0 else 0.0


@dataclass
class SegmentEvalReport:
    """片段级评估结果"""
    classes: Tuple[str, ...]
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    substitutions: np.ndarray
    deletions: np.ndarray
    insertions: np.ndarray
    n_ref: int
    n_sys: int
    class_instances: Dict[str, int] = field(default_factory=dict)

    @property
    def n_segments(self) -> int:
        return int(self.substitutions.shape[0])

    @property
    def total_tp(self) -> int:
        return int(self.tp.sum())

    @property
    def total_fp(self) -> int:
        return int(self.fp.sum())

    @property
    def total_fn(self) -> int:
        return int(self.fn.sum())

    @property
    def error_rate(self) -> float:
        errors = self.substitutions.sum() + self.deletions.sum() + self.insertions.sum()
        return float(errors / max(self.n_ref, 1))

    @property
    def f1(self) -> float:
        """micro F1"""
        return _f1(self.total_tp, self.total_fp, self.total_fn)

    @property
    def class_f1(self) -> Dict[str, float]:
        return {c: _f1(self.tp[i], self.fp[i], self.fn[i]) for i, c in enumerate(self.classes)}

    @property
    def macro_f1(self) -> float:
        return float(np.mean(list(self.class_f1.values()))) if self.classes else 0.0

    def class_f1_table(self) -> List[Tuple[str, int, float]]:
        """(class, 参考实例数, F1)，按实例数降序、类别名升序"""
        f1 = self.class_f1
        rows = [(c, int(self.class_instances.get(c, 0)), f1[c]) for c in self.classes]
        return sorted(rows, key=lambda r: (-r[1], r[0]))


def _count_instances(active: np.ndarray) -> np.ndarray:
    """每列连续活动游程的数量"""
    padded = np.vstack([np.zeros((1, active.shape[1]), dtype=np.int8), active.astype(np.int8)])
    return (np.diff(padded, axis=0) == 1).sum(axis=0)


def segment_eval(
    reference: ThresholdedActivity,
    system: ThresholdedActivity,
) -> SegmentEvalReport:
    """
    片段级评估

    Raises:
        DataError: 时长或类别列表不一致
    """
    if reference.classes != system.classes:
        raise DataError("reference and system use different class lists")
    if reference.duration != system.duration:
        raise DataError(
            f"duration mismatch: reference {reference.duration} s, system {system.duration} s"
        )
    ref, sys_ = reference.active, system.active
    tp_grid = ref & sys_
    fp_grid = ~ref & sys_
    fn_grid = ref & ~sys_

    fn_k = fn_grid.sum(axis=1)
    fp_k = fp_grid.sum(axis=1)
    instances = _count_instances(ref)
    return SegmentEvalReport(
        classes=reference.classes,
        tp=tp_grid.sum(axis=0),
        fp=fp_grid.sum(axis=0),
        fn=fn_grid.sum(axis=0),
        substitutions=np.minimum(fn_k, fp_k),
        deletions=np.maximum(0, fn_k - fp_k),
        insertions=np.maximum(0, fp_k - fn_k),
        n_ref=int(ref.sum()),
        n_sys=int(sys_.sum()),
        class_instances={c: int(n) for c, n in zip(reference.classes, instances)},
    )


def concatenate_activities(activities: Sequence[ThresholdedActivity], recording: str = 'all') -> ThresholdedActivity:
    """多段录音的活动矩阵沿时间拼接，用于跨录音汇总"""
    if not activities:
        raise DataError("nothing to evaluate")
    classes = activities[0].classes
    for a in activities:
        if a.classes != classes:
            raise DataError(f"recording '{a.recording}' uses a different class list")
    return ThresholdedActivity(recording, classes, np.vstack([a.active for a in activities]))


def segment_eval_many(
    pairs: Sequence[Tuple[ThresholdedActivity, ThresholdedActivity]],
) -> SegmentEvalReport:
    """跨录音评估；逐录音检查时长，事件实例数按录音分别统计后相加"""
    reports = [segment_eval(ref, sys_) for ref, sys_ in pairs]
    if not reports:
        raise DataError("nothing to evaluate")
    classes = reports[0].classes
    for r in reports:
        if r.classes != classes:
            raise DataError("recordings use different class lists")
    return SegmentEvalReport(
        classes=classes,
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports),
        substitutions=np.concatenate([r.substitutions for r in reports]),
        deletions=np.concatenate([r.deletions for r in reports]),
        insertions=np.concatenate([r.insertions for r in reports]),
        n_ref=sum(r.n_ref for r in reports),
        n_sys=sum(r.n_sys for r in reports),
        class_instances={c: sum(r.class_instances[c] for r in reports) for c in classes},
    )


def kld(system: np.ndarray, reference: np.ndarray, eps: float = 1e-7) -> float:
    """
    伯努利 KL 散度 D(ref ‖ sys)，对类别求和、对片段取均值

    Args:
        system: 系统分数 (segments × classes)，截断到 [eps, 1 − eps]
        reference: 参考标签（二值或软标签）
        eps: 截断下限

    Raises:
        DataError: 形状不一致
    """
    q = np.asarray(system, dtype=np.float64)
    p = np.asarray(reference, dtype=np.float64)
    if q.shape != p.shape:
        raise DataError(f"system scores {q.shape} and reference {p.shape} differ in shape")
    if q.ndim == 1:
        q, p = q[:, np.newaxis], p[:, np.newaxis]
    if q.shape[0] == 0:
        raise DataError("KLD over zero segments")
    q = np.clip(q, eps, 1.0 - eps)
    divergence = xlogy(p, p) - xlogy(p, q) + xlogy(1.0 - p, 1.0 - p) - xlogy(1.0 - p, 1.0 - q)
    return float(np.mean(np.sum(divergence, axis=1)))


# ============================================================================
# 报告
# ============================================================================

def format_metric(value: float) -> str:
    return f"{value:.6f}"


def report_lines(
    report: SegmentEvalReport,
    kld_value: Optional[float] = None,
    prefix: str = '',
) -> List[str]:
    """
    每行一个指标: metric\\tclass|micro\\tvalue

    类别行按参考实例数降序排列。
    """
    name = (lambda metric: f"{prefix}{metric}") if prefix else (lambda metric: metric)
    lines = [
        f"{name('ER')}\tmicro\t{format_metric(report.error_rate)}",
        f"{name('F1')}\tmicro\t{format_metric(report.f1)}",
        f"{name('F1')}\tmacro\t{format_metric(report.macro_f1)}",
    ]
    if kld_value is not None:
        lines.append(f"{name('KLD')}\tmicro\t{format_metric(kld_value)}")
    for label, _, value in report.class_f1_table():
        lines.append(f"{name('F1')}\t{label}\t{format_metric(value)}")
    return lines


def report_text(sections: Mapping[str, Tuple[SegmentEvalReport, Optional[float]]]) -> str:
    """多个评估行（如 H_BCE_SIG@0.5）合并为一个文本文档，保持传入顺序"""
    lines = []
    for row, (report, kld_value) in sections.items():
        lines.extend(report_lines(report, kld_value, prefix=f"{row}:"))
    return ''.join(f"{line}\n" for line in lines)
