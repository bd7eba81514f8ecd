"""
命令基类和通用接口定义
"""
import asyncio
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, Optional

from config.logging_config import get_logger


class CommandStatus(Enum):
    """命令状态枚举"""
    IDLE = "idle"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    TIMEOUT = "timeout"


@dataclass
class CommandConfig:
    """命令配置类"""
    name: str
    version: str = "1.0.0"
    description: str = ""
    timeout: Optional[int] = None  # 超时时间（秒），None 表示不限
    enabled: bool = True
    extra_config: Dict[str, Any] = field(default_factory=dict)


@dataclass
class CommandResponse:
    """命令响应类"""
    success: bool
    data: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    run_id: str = ""
    command_name: str = ""
    execution_time: float = 0.0
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())


class BaseCommand(ABC):
    """命令基类：子类实现同步的 run，基类负责线程调度、超时与异常转换"""

    def __init__(self, config: CommandConfig):
        self.config = config
        self.status = CommandStatus.IDLE
        self._logger = get_logger(f"{__name__}.{config.name}")
        self._logger.debug(f"🧩 [{config.name}] 命令就绪 (v{config.version})")

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def is_enabled(self) -> bool:
        return self.config.enabled

    @property
    def current_status(self) -> CommandStatus:
        return self.status

    @abstractmethod
    def run(self, **kwargs) -> Dict[str, Any]:
        """执行命令并返回结果数据，失败时抛出异常"""

    async def process(self, **kwargs) -> CommandResponse:
        data = await asyncio.to_thread(self.run, **kwargs)
        return CommandResponse(success=True, data=data)

    async def execute_with_timeout(self, timeout: Optional[int] = None, **kwargs) -> CommandResponse:
        """带超时控制的执行方法；所有异常都转换为失败响应"""
        run_id = kwargs.pop("run_id", None) or f"{self.name}_{int(time.time())}"
        if not self.is_enabled:
            return CommandResponse(success=False, error=f"命令 {self.name} 已禁用",
                                   command_name=self.name, run_id=run_id)

        timeout = timeout or self.config.timeout
        self.status = CommandStatus.RUNNING
        start_time = time.time()
        self._logger.info(f"🚀 [{self.name}] 开始执行 (run_id={run_id})")

        try:
            result = await asyncio.wait_for(self.process(**kwargs), timeout=timeout)
            result.execution_time = time.time() - start_time
            result.run_id = run_id
            result.command_name = self.name
            self.status = CommandStatus.COMPLETED
            self._logger.info(f"✅ [{self.name}] 执行成功，耗时: {result.execution_time:.2f}秒")
            return result

        except asyncio.TimeoutError:
            self.status = CommandStatus.TIMEOUT
            self._logger.error(f"⏰ [{self.name}] 执行超时: {timeout}秒")
            return CommandResponse(
                success=False,
                error=f"执行超时，超过 {timeout} 秒",
                command_name=self.name,
                run_id=run_id,
                execution_time=time.time() - start_time,
            )

        except Exception as e:
            self.status = CommandStatus.FAILED
            execution_time = time.time() - start_time
            self._logger.error(f"💥 [{self.name}] 执行失败: {type(e).__name__}: {e}")
            self._logger.info(f"⏱️ 失败前耗时: {execution_time:.2f}秒")
            return CommandResponse(
                success=False,
                error=f"{type(e).__name__}: {e}",
                command_name=self.name,
                run_id=run_id,
                execution_time=execution_time,
            )

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "version": self.config.version,
            "description": self.config.description,
            "status": self.status.value,
            "enabled": self.is_enabled,
            "timeout": self.config.timeout,
        }

    def __repr__(self) -> str:
        return f"Command({self.name}, {self.config.version}, {self.status.value})"


class CommandFactory(ABC):
    """命令工厂基类"""

    @abstractmethod
    def create_command(self, config: CommandConfig) -> BaseCommand:
        pass

    @abstractmethod
    def get_default_config(self) -> CommandConfig:
        pass


class SimpleCommandFactory(CommandFactory):
    """按类构造命令的工厂"""

    def __init__(self, command_class):
        self.command_class = command_class

    def create_command(self, config: CommandConfig) -> BaseCommand:
        return self.command_class(config)

    def get_default_config(self) -> CommandConfig:
        return CommandConfig(name=getattr(self.command_class, "command_name", self.command_class.__name__))
