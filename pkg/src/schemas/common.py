"""
Common Schemas - 通用模型
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..core.setups import RunStatus


class StrictModel(BaseModel):
    """禁止未知字段的基础模型，配置文件拼写错误会直接报错"""
    model_config = ConfigDict(extra='forbid', validate_assignment=True)


class StageResult(BaseModel):
    """阶段执行结果"""
    stage: str = Field(..., description="阶段名称")
    status: RunStatus = Field(default=RunStatus.PENDING, description="运行状态")
    artifacts: List[str] = Field(default_factory=list, description="写出的文件")
    message: Optional[str] = Field(default=None, description="附加信息")


class ErrorResponse(BaseModel):
    """错误响应"""
    success: bool = False
    code: int
    stage: str
    error: str

    def to_line(self) -> str:
        """单行、可机器解析的错误输出"""
        message = ' '.join(self.error.split())
        return f"error\tcode={self.code}\tstage={self.stage}\tmessage={message}"
