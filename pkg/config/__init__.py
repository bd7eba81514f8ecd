"""
配置模块
"""
from .logging_config import setup_logging, get_logger, configure_default_logging

__all__ = [
    "setup_logging",
    "get_logger",
    "configure_default_logging",
]
