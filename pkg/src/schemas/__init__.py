"""
Schemas - Pydantic 配置模型
"""

from .common import *
from .config_schemas import *
