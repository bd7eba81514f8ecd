"""
Tests模块 - 包含所有测试用例
"""
# 测试模块初始化文件
__all__ = []