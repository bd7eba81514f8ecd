"""
命令管理器 - 负责命令的创建、执行和执行历史
"""
import asyncio
import time
from typing import Any, Dict, List, Optional

from config.logging_config import get_logger

from .base_command import CommandResponse
from .registry import CommandRegistry, get_registry

logger = get_logger(__name__)


class CommandManager:
    """命令管理器：每次执行创建新实例，记录执行历史"""

    def __init__(self, registry: Optional[CommandRegistry] = None, max_history: int = 1000):
        self._registry = registry or get_registry()
        self._history: List[Dict[str, Any]] = []
        self._max_history = max_history

    @property
    def registry(self) -> CommandRegistry:
        return self._registry

    async def execute_command(self, command_name: str, timeout: Optional[int] = None,
                              **kwargs) -> CommandResponse:
        """执行指定命令；未注册的命令返回失败响应"""
        run_id = kwargs.pop("run_id", None) or f"{command_name}_{int(time.time())}"
        command = self._registry.create_command(command_name)
        if command is None:
            response = CommandResponse(success=False, error=f"未知命令: {command_name}",
                                       command_name=command_name, run_id=run_id)
        else:
            response = await command.execute_with_timeout(timeout=timeout, run_id=run_id, **kwargs)
        self._record_execution(response)
        logger.info(f"🎯 {command_name}: {'成功' if response.success else '失败'}，"
                    f"耗时 {response.execution_time:.2f}秒")
        return response

    def run(self, command_name: str, timeout: Optional[int] = None, **kwargs) -> CommandResponse:
        """同步入口（命令行使用）"""
        return asyncio.run(self.execute_command(command_name, timeout=timeout, **kwargs))

    def list_commands(self) -> List[Dict[str, Any]]:
        return self._registry.list_commands_info()

    def _record_execution(self, response: CommandResponse):
        self._history.append({
            "command_name": response.command_name,
            "run_id": response.run_id,
            "success": response.success,
            "error": response.error,
            "execution_time": response.execution_time,
            "timestamp": response.timestamp,
        })
        if len(self._history) > self._max_history:
            self._history = self._history[-self._max_history:]

    def get_execution_history(self, command_name: Optional[str] = None,
                              limit: Optional[int] = None) -> List[Dict[str, Any]]:
        history = self._history
        if command_name:
            history = [h for h in history if h["command_name"] == command_name]
        if limit:
            history = history[-limit:]
        return history

    def get_statistics(self) -> Dict[str, Any]:
        total = len(self._history)
        successful = sum(1 for h in self._history if h["success"])
        return {
            "total_executions": total,
            "successful_executions": successful,
            "failed_executions": total - successful,
            "success_rate": successful / total * 100 if total else 0.0,
            "average_execution_time": (sum(h["execution_time"] for h in self._history) / total
                                       if total else 0.0),
            "registered_commands": len(self._registry.list_commands()),
        }


# 全局命令管理器实例
_global_manager: Optional[CommandManager] = None


def get_command_manager() -> CommandManager:
    """获取全局命令管理器实例"""
    global _global_manager
    if _global_manager is None:
        _global_manager = CommandManager()
    return _global_manager
