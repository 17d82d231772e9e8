"""
输出格式化模块 - 统一管理报告与控制台摘要的格式

- format_results_table: 汇总表（行 = 训练设置 × 阈值方法，列 = ER / F1 / KLD）
- format_class_table: 按参考实例数排序的类别 F1 表
- print_*: 控制台阶段摘要，受 PRINT_ENABLED 开关控制，写到 stderr
"""

import sys
from typing import Dict, List, Optional, Sequence, Tuple


class ReportFormatter:
    """报告格式化器 - 统一管理所有输出样式"""

    # 全局开关：是否在控制台打印阶段摘要（报告文件不受影响）
    PRINT_ENABLED = True

    # 分隔符长度
    SEPARATOR_LENGTH = 70

    # 分隔符样式
    SEPARATOR_STAGE = "="
    SEPARATOR_TABLE = "-"

    # 表格列宽
    ROW_WIDTH = 28
    VALUE_WIDTH = 10

    @staticmethod
    def format_value(value: Optional[float], percent: bool = False) -> str:
        if value is None:
            return "-"
        return f"{100.0 * value:.2f}" if percent else f"{value:.3f}"

    @classmethod
    def format_results_table(cls, rows: Sequence[Tuple[str, float, float, Optional[float]]]) -> str:
        """
        汇总表

        Args:
            rows: (行名, ER, F1, KLD)；KLD 为 None 时显示 "-"

        Returns:
            以换行结尾的多行文本，F1 以百分数显示
        """
        header = f"{'system':<{cls.ROW_WIDTH}}{'ER':>{cls.VALUE_WIDTH}}{'F1 (%)':>{cls.VALUE_WIDTH}}{'KLD':>{cls.VALUE_WIDTH}}"
        lines = [header, cls.SEPARATOR_TABLE * len(header)]
        for name, er, f1, kld in rows:
            lines.append(
                f"{name:<{cls.ROW_WIDTH}}"
                f"{cls.format_value(er):>{cls.VALUE_WIDTH}}"
                f"{cls.format_value(f1, percent=True):>{cls.VALUE_WIDTH}}"
                f"{cls.format_value(kld):>{cls.VALUE_WIDTH}}"
            )
        return '\n'.join(lines) + '\n'

    @classmethod
    def format_class_table(
        cls,
        classes: Sequence[Tuple[str, int]],
        columns: Dict[str, Dict[str, float]],
    ) -> str:
        """
        类别 F1 表

        Args:
            classes: (类别, 参考实例数)，已按实例数排序
            columns: 列名 -> {类别: F1}
        """
        names = list(columns)
        header = f"{'class':<{cls.ROW_WIDTH}}{'n_ref':>{cls.VALUE_WIDTH}}" + ''.join(
            f"{name:>{max(cls.VALUE_WIDTH, len(name) + 2)}}" for name in names
        )
        lines = [header, cls.SEPARATOR_TABLE * len(header)]
        for label, count in classes:
            cells = ''.join(
                f"{cls.format_value(columns[name].get(label), percent=True):>{max(cls.VALUE_WIDTH, len(name) + 2)}}"
                for name in names
            )
            lines.append(f"{label:<{cls.ROW_WIDTH}}{count:>{cls.VALUE_WIDTH}}{cells}")
        return '\n'.join(lines) + '\n'

    # ========================================================================
    # 控制台摘要
    # ========================================================================

    @classmethod
    def _emit(cls, text: str) -> None:
        print(text, file=sys.stderr)

    @classmethod
    def print_stage_start(cls, stage: str) -> None:
        if not cls.PRINT_ENABLED:
            return
        cls._emit(cls.SEPARATOR_STAGE * cls.SEPARATOR_LENGTH)
        cls._emit(f"[{stage}] started")

    @classmethod
    def print_stage_complete(cls, stage: str, artifacts: List[str]) -> None:
        if not cls.PRINT_ENABLED:
            return
        cls._emit(f"[{stage}] completed, {len(artifacts)} artifacts")

    @classmethod
    def print_stage_failed(cls, stage: str, message: str) -> None:
        if not cls.PRINT_ENABLED:
            return
        cls._emit(f"[{stage}] failed: {message}")

    @classmethod
    def print_report(cls, text: str) -> None:
        """把报告正文打印到 stdout"""
        if not cls.PRINT_ENABLED:
            return
        print(text, end='' if text.endswith('\n') else '\n')
