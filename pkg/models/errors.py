"""
异常定义 - 工具包内所有可预期错误的层级
"""


class C3DVQAError(Exception):
    """工具包异常基类"""


class ShapeError(C3DVQAError, ValueError):
    """张量或视频形状不匹配"""


class AutogradError(C3DVQAError):
    """反向传播前置条件不满足（非标量损失、脱离计算带等）"""


class OptimizerError(C3DVQAError):
    """优化器状态异常，例如缺少梯度"""


class DivergenceError(C3DVQAError):
    """训练损失出现非有限值"""


class CheckpointError(C3DVQAError):
    """检查点文件损坏或与配置不兼容"""


class VideoFormatError(C3DVQAError):
    """原始视频文件或sidecar不合法"""


class ManifestError(C3DVQAError):
    """数据集清单不合法"""


class SplitError(C3DVQAError):
    """训练/测试划分无法构造"""


class MetricError(C3DVQAError):
    """评价指标无定义（常数序列、样本过少等）"""


class ConfigError(C3DVQAError):
    """运行配置不合法"""
