"""
默认参数 - 网络结构、训练日程与采样设置
"""
from typing import Dict, List

# 网络结构
BRANCH_CHANNELS = 16
BRANCH_KERNEL = 3
BRANCH_STRIDE = 2
BRANCH_PADDING = 1
TRUNK_CHANNELS: List[int] = [64, 64, 32, 1]
TRUNK_KERNEL = 3
FC_HIDDEN = 64
SPATIAL_REDUCTION = 4  # 两个stride=2的分支层
# 全连接输入：GAP 后乘以池化块面积，即每个 4×4 块内 |残差|·阈值 之和的平均
POOLED_FEATURE_GAIN = float(SPATIAL_REDUCTION ** 2)
# 输出层偏置初值：归一化标签区间 [0, 1] 的中点
LABEL_CENTER = 0.5

# 采样
DEFAULT_FRAMES = 60
DEFAULT_WINDOW = 112
PIXEL_MAX = 255.0

# 目标函数
DEFAULT_LAMBDA1 = 1.0
DEFAULT_LAMBDA2 = 1e-4

# 优化器与学习率衰减
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
PLATEAU_FACTOR = 0.9
PLATEAU_PATIENCE = 5
PLATEAU_REL_TOL = 1e-6

# 训练与评估日程
DEFAULT_EPOCHS = 250
DEFAULT_BATCH_SIZE = 4
DEFAULT_REPEATS = 10
DEFAULT_SPLIT_FRACTION = 0.8
SWEEP_FRAMES: List[int] = [15, 30, 60, 120]

# 数据集预设（初始学习率）
PRESETS: Dict[str, Dict[str, float]] = {
    "live": {"lr": 1e-4},
    "csiq": {"lr": 3e-4},
}
DEFAULT_LR = PRESETS["live"]["lr"]

# 逻辑斯蒂拟合
LOGISTIC_MAX_ITER = 200
LOGISTIC_REL_STEP = 1e-8

# 梯度检查
GRADCHECK_STEP = 1e-3
GRADCHECK_LAYER_TOL = 1e-3
GRADCHECK_E2E_TOL = 1e-2

# 每个训练失真视频每个epoch的随机时间抽样次数
DEFAULT_DRAWS_PER_VIDEO = 1

# PSNR 基线：完全相同的视频返回 +inf，作为排序分数时截断到该值
PSNR_CAP_DB = 100.0
