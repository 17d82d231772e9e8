"""
Run Manager - 阶段运行管理器

管理流水线各阶段的状态（pending / running / completed / failed），
并在线程池上并行处理按录音划分的工作，结果按提交顺序收集。
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

from ..core.errors import SoftSedError
from ..core.output_formatter import ReportFormatter
from ..core.setups import RunStatus
from ..schemas.common import StageResult

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


class RunManager:
    """运行管理器 - 管理阶段执行生命周期"""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._stages: Dict[str, StageResult] = {}
        self._order: List[str] = []
        self._lock = threading.Lock()

    def run_stage(self, stage: str, action: Callable[[], List[str]]) -> StageResult:
        """
        执行一个阶段

        Args:
            stage: 阶段名称
            action: 执行函数，返回写出的产物路径

        Returns:
            StageResult

        Raises:
            SoftSedError: 阶段失败时原样抛出（状态已记为 failed）
        """
        with self._lock:
            result = StageResult(stage=stage, status=RunStatus.RUNNING)
            self._stages[stage] = result
            if stage not in self._order:
                self._order.append(stage)
        ReportFormatter.print_stage_start(stage)
        logger.info(f"Stage '{stage}' started")

        try:
            artifacts = action() or []
        except SoftSedError as e:
            self._finish(stage, RunStatus.FAILED, message=e.message)
            ReportFormatter.print_stage_failed(stage, e.message)
            logger.error(f"Stage '{stage}' failed: {e.message}")
            raise
        except Exception as e:
            self._finish(stage, RunStatus.FAILED, message=str(e))
            ReportFormatter.print_stage_failed(stage, str(e))
            logger.exception(f"Stage '{stage}' failed unexpectedly")
            raise

        result = self._finish(stage, RunStatus.COMPLETED, artifacts=[str(a) for a in artifacts])
        ReportFormatter.print_stage_complete(stage, result.artifacts)
        logger.info(f"Stage '{stage}' completed with {len(result.artifacts)} artifacts")
        return result

    def _finish(
        self,
        stage: str,
        status: RunStatus,
        artifacts: Optional[List[str]] = None,
        message: Optional[str] = None,
    ) -> StageResult:
        with self._lock:
            result = self._stages[stage]
            result.status = status
            result.artifacts = artifacts or []
            result.message = message
            return result

    def map(self, func: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """在线程池上并行处理，结果顺序与输入一致"""
        if self.workers == 1 or len(items) < 2:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(func, items))

    def status(self, stage: str) -> RunStatus:
        with self._lock:
            result = self._stages.get(stage)
            return result.status if result else RunStatus.PENDING

    def results(self) -> List[StageResult]:
        """按首次执行顺序返回所有阶段结果"""
        with self._lock:
            return [self._stages[name] for name in self._order]
