"""
File: tests/conftest.py
测试共享夹具
"""

import numpy as np
import pytest

from src.config import get_config
from src.kinematics.robot_model import load_model


@pytest.fixture(scope="session")
def planar2():
    """水平面内两连杆机械臂（关节绕z轴，连杆长1 m）"""
    return load_model("planar2")


@pytest.fixture(scope="session")
def arm7():
    """七自由度机械臂"""
    return load_model("arm7")


@pytest.fixture
def restore_config():
    """测试结束后恢复全局配置"""
    config = get_config()
    snapshot = config.get_all()
    yield config
    config.config = snapshot


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_configuration(model, rng, margin=0.2):
    """关节限位内的随机姿态"""
    return rng.uniform(model.q_min + margin, model.q_max - margin)
