"""
Services模块 - 训练、评估与梯度检查服务
"""
from .trainer import Trainer, TrainResult, train_on_plan, train_from_config, checkpoint_metadata
from .evaluator import (
    VideoScorer, NetworkScorer, PsnrScorer, evaluate_split, evaluate_plan, evaluate_repeats, sweep_frames
)
from .gradcheck import GradcheckRow, run_gradcheck, check_function, check_end_to_end

__all__ = [
    'Trainer',
    'TrainResult',
    'train_on_plan',
    'train_from_config',
    'checkpoint_metadata',
    'VideoScorer',
    'NetworkScorer',
    'PsnrScorer',
    'evaluate_split',
    'evaluate_plan',
    'evaluate_repeats',
    'sweep_frames',
    'GradcheckRow',
    'run_gradcheck',
    'check_function',
    'check_end_to_end',
]
