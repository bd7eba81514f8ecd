"""
共享测试夹具
"""
import numpy as np
import pytest

from models.run_config import ModelVariant
from network import ModelConfig, build_model
from tools.synthetic_tools import make_noise_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """D=4、16×16 的小网络配置"""
    return ModelConfig(frames=4, patch=16, branch_channels=4, trunk_channels=[8, 4, 1], fc_hidden=8)


@pytest.fixture
def tiny_params(tiny_config):
    return build_model(tiny_config, seed=7)


@pytest.fixture
def tiny_2d_params():
    cfg = ModelConfig(frames=4, patch=16, branch_channels=4, trunk_channels=[8, 4, 1], fc_hidden=8,
                      variant=ModelVariant.ABLATION_2D)
    return build_model(cfg, seed=7)


@pytest.fixture
def noise_dataset(tmp_path):
    """6 个参考视频 × 5 个噪声等级，32×32，8 帧"""
    return make_noise_dataset(tmp_path / "noise", n_refs=6, width=32, height=32, frames=8, seed=3)
