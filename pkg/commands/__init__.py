"""
Commands模块 - 命令行与服务接口共用的命令
"""
from .base_command import BaseCommand, CommandConfig, CommandResponse, CommandStatus
from .command_manager import CommandManager, get_command_manager
from .registry import CommandRegistry, get_registry

from .train_command import register_train_command
from .eval_command import register_eval_command
from .predict_command import register_predict_command
from .gradcheck_command import register_gradcheck_command
from .sweep_command import register_sweep_command
from .dump_maps_command import register_dump_maps_command
from .psnr_command import register_psnr_command

register_train_command()
register_eval_command()
register_predict_command()
register_gradcheck_command()
register_sweep_command()
register_dump_maps_command()
register_psnr_command()

__all__ = [
    'BaseCommand',
    'CommandConfig',
    'CommandResponse',
    'CommandStatus',
    'CommandManager',
    'CommandRegistry',
    'get_command_manager',
    'get_registry',
]
