"""
命令注册中心 - 管理所有可用的命令
"""
from dataclasses import replace
from typing import Any, Dict, List, Optional, Type

from config.logging_config import get_logger

from .base_command import BaseCommand, CommandConfig, CommandFactory, SimpleCommandFactory

logger = get_logger(__name__)


class CommandRegistry:
    """命令注册中心，负责命令的注册和发现"""

    def __init__(self):
        self._factories: Dict[str, CommandFactory] = {}
        self._configs: Dict[str, CommandConfig] = {}
        self._metadata: Dict[str, Dict[str, Any]] = {}

    def register(
        self,
        name: str,
        factory: CommandFactory,
        config: Optional[CommandConfig] = None,
        metadata: Optional[Dict[str, Any]] = None
    ):
        """注册命令"""
        if name in self._factories:
            logger.debug(f"⚠️ 命令 '{name}' 已存在，将被覆盖")
        self._factories[name] = factory
        self._configs[name] = config or factory.get_default_config()
        self._metadata[name] = metadata or {}
        logger.debug(f"✅ 命令 '{name}' 注册成功: {self._configs[name].description}")

    def register_class(
        self,
        name: str,
        command_class: Type[BaseCommand],
        config: Optional[CommandConfig] = None,
        metadata: Optional[Dict[str, Any]] = None
    ):
        self.register(name, SimpleCommandFactory(command_class), config, metadata)

    def unregister(self, name: str) -> bool:
        if name not in self._factories:
            logger.warning(f"⚠️ 命令 '{name}' 不存在")
            return False
        del self._factories[name]
        del self._configs[name]
        self._metadata.pop(name, None)
        logger.info(f"🗑️ 命令 '{name}' 注销成功")
        return True

    def get_config(self, name: str) -> Optional[CommandConfig]:
        return self._configs.get(name)

    def create_command(self, name: str, timeout: Optional[int] = None) -> Optional[BaseCommand]:
        """创建命令实例，timeout 非空时覆盖注册时的超时设置"""
        factory = self._factories.get(name)
        if factory is None:
            logger.error(f"❌ 命令 '{name}' 未注册")
            return None
        config = self._configs[name]
        if timeout is not None:
            config = replace(config, timeout=timeout)
        return factory.create_command(config)

    def list_commands(self) -> List[str]:
        return list(self._factories.keys())

    def get_command_info(self, name: str) -> Optional[Dict[str, Any]]:
        if name not in self._factories:
            return None
        config = self._configs[name]
        return {
            "name": name,
            "factory": self._factories[name].__class__.__name__,
            "config": {
                "version": config.version,
                "description": config.description,
                "timeout": config.timeout,
                "enabled": config.enabled,
            },
            "metadata": self._metadata.get(name, {}),
        }

    def list_commands_info(self) -> List[Dict[str, Any]]:
        return [self.get_command_info(name) for name in self.list_commands()]


# 全局命令注册中心实例
_global_registry = CommandRegistry()


def get_registry() -> CommandRegistry:
    """获取全局命令注册中心"""
    return _global_registry
