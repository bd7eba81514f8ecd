"""
Layers模块 - 网络层、损失函数、优化器与检查点
"""
from .layers import (
    Conv2DLayer, Conv3DLayer, FCLayer, he_normal,
    conv2d_forward, conv3d_forward, fc_forward, global_avg_pool, avg_pool
)
from .losses import LossHyperParams, quality_loss, weight_decay_term
from .optim import AdamState, adam_step, PlateauScheduler, plateau_update
from .checkpoint import save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint

__all__ = [
    'Conv2DLayer',
    'Conv3DLayer',
    'FCLayer',
    'he_normal',
    'conv2d_forward',
    'conv3d_forward',
    'fc_forward',
    'global_avg_pool',
    'avg_pool',
    'LossHyperParams',
    'quality_loss',
    'weight_decay_term',
    'AdamState',
    'adam_step',
    'PlateauScheduler',
    'plateau_update',
    'save_checkpoint',
    'load_checkpoint',
    'encode_checkpoint',
    'decode_checkpoint',
]
