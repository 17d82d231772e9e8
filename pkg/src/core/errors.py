"""
Errors - 统一异常定义

所有库函数只抛出这里定义的异常，由 CLI 统一转换为退出码:
- SoftSedError (1): 其余未分类的失败（CLI 对未预期异常也使用 1）
- UsageError   (2): 参数或配置错误
- DataError    (3): 输入数据错误（标签文件、特征文件等）
- NumericError (4): 数值计算失败（NaN 损失、非有限输入等）
"""

from typing import Optional


class SoftSedError(Exception):
    """基础异常"""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.details = details


class UsageError(SoftSedError):
    """参数或配置错误"""
    exit_code = 2


class DataError(SoftSedError):
    """输入数据错误"""
    exit_code = 3


class NumericError(SoftSedError):
    """数值计算失败"""
    exit_code = 4


class LabelParseError(DataError):
    """
    标签文件解析错误

    Args:
        message: 错误描述
        line_number: 出错的行号（从 1 开始）
        label: 不在词表中的标签（如果是词表错误）
    """

    def __init__(self, message: str, line_number: Optional[int] = None, label: Optional[str] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
        self.label = label
