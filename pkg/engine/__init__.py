"""
Engine模块 - 张量与反向模式自动微分
"""
from .tensor import (
    Tensor, Tape, TapeEntry, Function, backward, as_tensor,
    default_dtype, get_default_dtype, current_tape
)
from .ops import (
    RandomSpec, tensor_create, elementwise, matmul, reduce,
    add, sub, mul, neg, relu, sigmoid, absolute,
    reshape, permute, concat, add_bias
)
from .conv import conv_nd, conv_output_shape, avg_pool_spatial

__all__ = [
    'Tensor',
    'Tape',
    'TapeEntry',
    'Function',
    'backward',
    'as_tensor',
    'default_dtype',
    'get_default_dtype',
    'current_tape',
    'RandomSpec',
    'tensor_create',
    'elementwise',
    'matmul',
    'reduce',
    'add',
    'sub',
    'mul',
    'neg',
    'relu',
    'sigmoid',
    'absolute',
    'reshape',
    'permute',
    'concat',
    'add_bias',
    'conv_nd',
    'conv_output_shape',
    'avg_pool_spatial',
]
