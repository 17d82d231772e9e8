"""
softsed 测试
"""
