"""
gradcheck 命令 - 逐层与端到端梯度有限差分检查
"""
from typing import Any, Dict

from services.gradcheck import run_gradcheck

from .base_command import BaseCommand, CommandConfig, SimpleCommandFactory
from .registry import get_registry


class GradcheckCommand(BaseCommand):
    command_name = "gradcheck"

    def run(self, seed: int = 0, **kwargs) -> Dict[str, Any]:
        rows = run_gradcheck(seed=seed)
        return {"rows": [r.to_dict() for r in rows], "passed": all(r.passed for r in rows)}


def register_gradcheck_command():
    get_registry().register("gradcheck", SimpleCommandFactory(GradcheckCommand), CommandConfig(
        name="gradcheck",
        description="带梯度与中心差分对比（各层 ≤1e-3，端到端 ≤1e-2）",
    ), {"category": "verification"})
