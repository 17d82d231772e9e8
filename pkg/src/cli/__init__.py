"""
CLI Module - 命令行入口
"""

from .main import build_parser, run, main

__all__ = ['build_parser', 'run', 'main']
