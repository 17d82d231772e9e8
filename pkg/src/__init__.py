"""
softsed - 软标签声音事件检测工具包

模块结构:
- core/: 共享类型、异常、配置与报告格式
- schemas/: 配置文件模型
- labels/: 标签文件读写与词表
- crowd/: 众包模拟、标注者能力估计与软标签聚合
- features/: log-mel 特征
- training/: 前馈分类器与训练
- evaluation/: 分段指标与类别阈值
- storage/: 带来源注释的产物写出
- runner/: 流水线阶段与运行管理
- cli/: 命令行入口
"""

__version__ = '1.0.0'
