"""
Competence - 标注者能力估计（MACE 风格的二值 EM）

生成模型:
    T_i ~ Bernoulli(π)
    对每个投票: 以概率 θ_j 照抄 T_i，否则按 Bernoulli(ξ_j) 乱答

M 步使用加 δ 平滑（等价于 Beta(1+δ, 1+δ) 先验下的 MAP-EM），因此每次迭代
单调不减的是带先验项的目标函数；δ = 0 时即为普通对数似然。

多次随机重启，取目标函数最大的一次；重启可以并行，但初始化预先按顺序抽取，
结果按重启序号收集，与串行执行逐位一致。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.special import expit

from ..core.errors import DataError, LabelParseError, UsageError
from ..core.label_models import ClassVocabulary, WeakAnnotationSet
from ..labels.labelio import iter_records, read_text
from ..schemas.config_schemas import CompetenceConfig

logger = logging.getLogger(__name__)

# (recording, window_start, class)
ItemId = Tuple[str, int, str]

_TINY = 1e-300


@dataclass(eq=False)
class VoteMatrix:
    """
    稀疏投票矩阵（COO 形式）

    缺失项表示该标注者没看过该条目；隐式的 0 票必须已经物化。
    """
    items: List[ItemId]
    annotators: List[str]
    item_index: np.ndarray
    annotator_index: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.item_index = np.asarray(self.item_index, dtype=np.int64)
        self.annotator_index = np.asarray(self.annotator_index, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.int8)
        n = self.values.shape[0]
        if self.item_index.shape != (n,) or self.annotator_index.shape != (n,):
            raise DataError("vote index arrays must have the same length as the values")
        if n == 0:
            return
        if np.any((self.values != 0) & (self.values != 1)):
            raise DataError("votes must be 0 or 1")
        if np.bincount(self.item_index, minlength=self.n_items).min() < 1:
            raise DataError("every item must have at least one vote")
        if np.bincount(self.annotator_index, minlength=self.n_annotators).min() < 1:
            raise DataError("every annotator must have at least one vote")
        pairs = self.item_index * self.n_annotators + self.annotator_index
        if np.unique(pairs).shape[0] != n:
            raise DataError("an annotator voted twice on the same item")

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_annotators(self) -> int:
        return len(self.annotators)

    @property
    def n_votes(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def from_votes(cls, votes: Sequence[Tuple[ItemId, str, int]]) -> 'VoteMatrix':
        """从 (item, annotator, v) 三元组构建，条目与标注者按首次出现排序"""
        items: Dict[ItemId, int] = {}
        annotators: Dict[str, int] = {}
        rows, cols, values = [], [], []
        for item, annotator, value in votes:
            rows.append(items.setdefault(item, len(items)))
            cols.append(annotators.setdefault(annotator, len(annotators)))
            values.append(value)
        return cls(list(items), list(annotators), np.array(rows), np.array(cols), np.array(values))

    def votes_of(self, item: ItemId) -> List[Tuple[str, int]]:
        i = self.items.index(item)
        mask = self.item_index == i
        return [(self.annotators[j], int(v)) for j, v in zip(self.annotator_index[mask], self.values[mask])]

    def item_support(self) -> np.ndarray:
        """每个标注者投过票的条目数"""
        return np.bincount(self.annotator_index, minlength=self.n_annotators)


@dataclass
class CompetenceTable:
    """EM 估计结果"""
    theta: Dict[str, float]
    xi: Dict[str, float] = field(default_factory=dict)
    log_likelihood: float = float('nan')
    objective: float = float('nan')
    prior: float = 0.5
    low_support: Set[str] = field(default_factory=set)
    items: List[ItemId] = field(default_factory=list)
    posteriors: Optional[np.ndarray] = None
    history: List[float] = field(default_factory=list)
    likelihood_history: List[float] = field(default_factory=list)
    restart: int = -1

    def __post_init__(self):
        for annotator, value in self.theta.items():
            if not 0.0 < value < 1.0:
                raise DataError(f"competence of '{annotator}' must lie in (0, 1), got {value}")

    def weight(self, annotator: str) -> float:
        try:
            return self.theta[annotator]
        except KeyError:
            raise DataError(f"no competence estimate for annotator '{annotator}'") from None

    def mean_theta(self) -> float:
        return float(np.mean(list(self.theta.values()))) if self.theta else float('nan')


# ============================================================================
# 投票物化
# ============================================================================

def materialize_votes(
    annotations: Union[WeakAnnotationSet, Sequence[WeakAnnotationSet]],
    vocabulary: ClassVocabulary,
) -> VoteMatrix:
    """
    将弱标注物化为投票矩阵

    每个 (标注者, 窗口) 分配对词表中每个类别各产生一票: 选中为 1，否则为 0。
    条目为 (录音, 窗口起点, 类别)。

    Raises:
        DataError: 没有任何分配（"no items"）
    """
    sets = [annotations] if isinstance(annotations, WeakAnnotationSet) else list(annotations)
    votes = []
    for annotation_set in sets:
        for a in annotation_set.assignments:
            for label in vocabulary.classes:
                votes.append(((annotation_set.recording, a.start, label), a.annotator, int(label in a.selected)))
    if not votes:
        raise DataError("no items")
    return VoteMatrix.from_votes(votes)


# ============================================================================
# EM
# ============================================================================

@dataclass
class _EmResult:
    theta: np.ndarray
    xi: np.ndarray
    prior: float
    posteriors: np.ndarray
    log_likelihood: float
    objective: float
    history: List[float]
    likelihood_history: List[float]


class _EmProblem:
    """单个投票矩阵上的 EM 计算"""

    def __init__(self, matrix: VoteMatrix, smoothing: float):
        self.matrix = matrix
        self.smoothing = smoothing
        self.rows = matrix.item_index
        self.cols = matrix.annotator_index
        self.positive = matrix.values == 1
        self.votes_per_annotator = matrix.item_support().astype(np.float64)
        self.values = matrix.values.astype(np.float64)

    def vote_likelihoods(self, theta: np.ndarray, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """每票在 T=1 和 T=0 下的概率"""
        th = theta[self.cols]
        spam = np.where(self.positive, xi[self.cols], 1.0 - xi[self.cols])
        p1 = np.where(self.positive, th, 0.0) + (1.0 - th) * spam
        p0 = np.where(self.positive, 0.0, th) + (1.0 - th) * spam
        return p1, p0

    def e_step(self, theta: np.ndarray, xi: np.ndarray, prior: float):
        """
        Returns:
            (P(T_i=1), 每票照抄的期望, 对数似然, 目标函数)
        """
        p1, p0 = self.vote_likelihoods(theta, xi)
        n = self.matrix.n_items
        log1 = np.log(max(prior, _TINY)) + np.bincount(self.rows, np.log(np.maximum(p1, _TINY)), minlength=n)
        log0 = np.log(max(1.0 - prior, _TINY)) + np.bincount(self.rows, np.log(np.maximum(p0, _TINY)), minlength=n)
        posteriors = expit(log1 - log0)
        log_likelihood = float(np.sum(np.logaddexp(log1, log0)))
        copied = self.copy_expectations(posteriors, theta, p1, p0)
        return posteriors, copied, log_likelihood, log_likelihood + self.penalty(theta, xi, prior)

    def copy_expectations(self, posteriors: np.ndarray, theta: np.ndarray, p1: np.ndarray, p0: np.ndarray):
        th = theta[self.cols]
        q1 = posteriors[self.rows]
        copy1 = np.where(self.positive, th / np.maximum(p1, _TINY), 0.0)
        copy0 = np.where(self.positive, 0.0, th / np.maximum(p0, _TINY))
        return q1 * copy1 + (1.0 - q1) * copy0

    def m_step(self, posteriors: np.ndarray, copied: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        d = self.smoothing
        m = self.matrix.n_annotators
        copies = np.bincount(self.cols, copied, minlength=m)
        theta = (copies + d) / (self.votes_per_annotator + 2 * d)
        spam_weight = 1.0 - copied
        spam_total = np.bincount(self.cols, spam_weight, minlength=m)
        spam_positive = np.bincount(self.cols, spam_weight * self.values, minlength=m)
        with np.errstate(invalid='ignore', divide='ignore'):
            xi = (spam_positive + d) / (spam_total + 2 * d)
        # 从不乱答的标注者 ξ 无定义，取 0.5
        xi = np.where(np.isfinite(xi), xi, 0.5)
        prior = float((posteriors.sum() + d) / (self.matrix.n_items + 2 * d))
        return theta, np.clip(xi, 0.0, 1.0), prior

    def penalty(self, theta: np.ndarray, xi: np.ndarray, prior: float) -> float:
        d = self.smoothing
        if d == 0:
            return 0.0
        params = np.concatenate([theta, xi, [prior]])
        params = np.clip(params, _TINY, 1.0 - 1e-16)
        return float(d * np.sum(np.log(params) + np.log1p(-params)))

    def run(
        self,
        theta: np.ndarray,
        xi: np.ndarray,
        prior: float,
        iterations: int,
        start_posteriors: Optional[np.ndarray] = None,
    ) -> _EmResult:
        theta, xi = theta.astype(np.float64), xi.astype(np.float64)
        if start_posteriors is not None:
            p1, p0 = self.vote_likelihoods(theta, xi)
            copied = self.copy_expectations(start_posteriors, theta, p1, p0)
            theta, xi, prior = self.m_step(start_posteriors, copied)

        history, likelihood_history = [], []
        for iteration in range(iterations):
            posteriors, copied, log_likelihood, objective = self.e_step(theta, xi, prior)
            history.append(objective)
            likelihood_history.append(log_likelihood)
            logger.debug(f"EM iteration {iteration}: log-likelihood={log_likelihood:.6f} objective={objective:.6f}")
            theta, xi, prior = self.m_step(posteriors, copied)

        posteriors, _, log_likelihood, objective = self.e_step(theta, xi, prior)
        history.append(objective)
        likelihood_history.append(log_likelihood)
        return _EmResult(theta, xi, prior, posteriors, log_likelihood, objective, history, likelihood_history)


def _draw_initializations(n_annotators: int, restarts: int, seed) -> List[Tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(seed)
    inits = []
    for _ in range(restarts):
        theta = rng.uniform(0.5, 0.9, size=n_annotators)
        xi = rng.uniform(0.3, 0.7, size=n_annotators)
        inits.append((theta, xi))
    return inits


def estimate_competence(
    matrix: VoteMatrix,
    config: Optional[CompetenceConfig] = None,
    seed=0,
) -> CompetenceTable:
    """
    估计每个标注者的能力 θ_j

    Args:
        matrix: 已物化隐式 0 票的投票矩阵
        config: iterations / restarts / smoothing / workers / θ 截断范围
        seed: 64 位种子或 SeedSequence

    Returns:
        CompetenceTable，θ 截断到 [theta_min, theta_max]

    Raises:
        DataError: 投票矩阵为空
    """
    config = config or CompetenceConfig()
    if matrix.n_votes == 0 or matrix.n_items == 0:
        raise DataError("no items")
    if config.theta_min >= config.theta_max:
        raise UsageError("theta_min must be lower than theta_max")

    problem = _EmProblem(matrix, config.smoothing)
    inits = _draw_initializations(matrix.n_annotators, config.restarts, seed)

    def run_restart(init: Tuple[np.ndarray, np.ndarray]) -> _EmResult:
        return problem.run(init[0], init[1], 0.5, config.iterations)

    if config.workers > 1 and config.restarts > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(run_restart, inits))
    else:
        results = [run_restart(init) for init in inits]

    # 目标函数相同时取序号最小的重启
    best_index = max(range(len(results)), key=lambda r: (results[r].objective, -r))
    best = results[best_index]
    logger.info(
        f"Competence EM: {matrix.n_annotators} annotators, {matrix.n_items} items, "
        f"best restart {best_index} objective={best.objective:.6f}"
    )

    if float(np.mean(best.theta)) < 0.5:
        logger.warning(
            f"Mean competence {np.mean(best.theta):.3f} < 0.5; switching to the flipped labeling"
        )
        flipped = problem.run(best.theta, best.xi, 1.0 - best.prior, config.iterations,
                              start_posteriors=1.0 - best.posteriors)
        # 翻转解总是被采用，即使目标函数更低
        if flipped.objective < best.objective:
            logger.warning(
                f"Flipped labeling has a lower objective ({flipped.objective:.6f} < {best.objective:.6f}); "
                f"keeping it, mean competence now {np.mean(flipped.theta):.3f}"
            )
        best = flipped

    support = matrix.item_support()
    low_support = {matrix.annotators[j] for j in np.flatnonzero(support < 2)}
    for annotator in sorted(low_support):
        logger.warning(f"Annotator '{annotator}' voted on a single item; competence estimate is low-support")

    theta = np.clip(best.theta, config.theta_min, config.theta_max)
    return CompetenceTable(
        theta={a: float(t) for a, t in zip(matrix.annotators, theta)},
        xi={a: float(x) for a, x in zip(matrix.annotators, best.xi)},
        log_likelihood=best.log_likelihood,
        objective=best.objective,
        prior=best.prior,
        low_support=low_support,
        items=list(matrix.items),
        posteriors=best.posteriors,
        history=best.history,
        likelihood_history=best.likelihood_history,
        restart=best_index,
    )


def estimate_competence_by_group(
    matrices: Mapping[str, VoteMatrix],
    config: Optional[CompetenceConfig] = None,
    seed: int = 0,
) -> Dict[str, CompetenceTable]:
    """按组（如场景）分别估计能力，每组使用 SeedSequence 派生的独立种子"""
    groups = sorted(matrices)
    children = np.random.SeedSequence(seed).spawn(len(groups))
    return {
        group: estimate_competence(matrices[group], config, child)
        for group, child in zip(groups, children)
    }


# ============================================================================
# 投票聚合
# ============================================================================

def majority_vote(matrix: VoteMatrix) -> Dict[ItemId, int]:
    """严格多数为 1 则为 1，平票为 0"""
    if matrix.n_votes == 0:
        raise DataError("no items")
    positives = np.bincount(matrix.item_index, matrix.values.astype(np.float64), minlength=matrix.n_items)
    counts = np.bincount(matrix.item_index, minlength=matrix.n_items)
    return {item: int(2 * positives[i] > counts[i]) for i, item in enumerate(matrix.items)}


def weighted_vote(matrix: VoteMatrix, table: CompetenceTable) -> Dict[ItemId, int]:
    """按能力加权的投票，加权均值 >= 0.5 为 1"""
    if matrix.n_votes == 0:
        raise DataError("no items")
    weights = np.array([table.weight(a) for a in matrix.annotators])[matrix.annotator_index]
    positives = np.bincount(matrix.item_index, weights * matrix.values, minlength=matrix.n_items)
    totals = np.bincount(matrix.item_index, weights, minlength=matrix.n_items)
    return {item: int(positives[i] >= 0.5 * totals[i]) for i, item in enumerate(matrix.items)}


# ============================================================================
# 能力表文件
# ============================================================================

def serialize_competence(table: CompetenceTable) -> str:
    """<annotator>\\t<theta>\\t<xi>，6 位小数；低支持度标注者以注释行标出"""
    lines = []
    if np.isfinite(table.log_likelihood):
        lines.append(f"# log_likelihood={table.log_likelihood:.6f}\n")
    lines.extend(f"# low_support\t{annotator}\n" for annotator in sorted(table.low_support))
    for annotator in sorted(table.theta):
        xi = table.xi.get(annotator, 0.5)
        lines.append(f"{annotator}\t{table.theta[annotator]:.6f}\t{xi:.6f}\n")
    return ''.join(lines)


def parse_competence(text: str) -> CompetenceTable:
    """
    解析能力表

    Raises:
        LabelParseError: 字段数错误、数值越界或标注者重复
    """
    theta, xi = {}, {}
    low_support = set()
    log_likelihood = float('nan')
    for line in text.splitlines():
        if line.startswith('# low_support\t'):
            low_support.add(line.split('\t', 1)[1].strip())
        elif line.startswith('# log_likelihood='):
            log_likelihood = float(line.split('=', 1)[1])

    for line_number, fields in iter_records(text):
        if len(fields) != 3:
            raise LabelParseError(f"expected 3 fields (annotator, theta, xi), got {len(fields)}", line_number)
        annotator = fields[0]
        try:
            t, x = float(fields[1]), float(fields[2])
        except ValueError:
            raise LabelParseError(f"non-numeric competence for '{annotator}'", line_number) from None
        if not 0.0 < t < 1.0 or not 0.0 <= x <= 1.0:
            raise LabelParseError(f"competence values for '{annotator}' out of range", line_number)
        if annotator in theta:
            raise LabelParseError(f"duplicate annotator '{annotator}'", line_number)
        theta[annotator], xi[annotator] = t, x
    return CompetenceTable(theta=theta, xi=xi, log_likelihood=log_likelihood, low_support=low_support)


def read_competence(path: Union[str, Path]) -> CompetenceTable:
    return parse_competence(read_text(path, 'competence'))
