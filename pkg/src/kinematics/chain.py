"""
File: src/kinematics/chain.py
串联链正运动学与几何雅可比
雅可比矩阵在世界坐标系下表达，线速度行在前 (0:3)，角速度行在后 (3:6)
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

# 本地模块导入
from .se3 import Pose, compose, axis_rotation
from .robot_model import RobotModel

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("chain")


@dataclass(frozen=True)
class ChainFrames:
    """给定构型下各连杆的世界坐标系信息"""
    link_poses: List[Pose]           # 各连杆坐标系（原点位于关节处）
    axes: np.ndarray                 # n×3 世界坐标系关节轴
    origins: np.ndarray              # n×3 世界坐标系关节原点
    ee_pose: Pose                    # 末端执行器位姿


def chain_frames(model: RobotModel, q: np.ndarray) -> ChainFrames:
    """
    沿运动链计算所有连杆坐标系

    Args:
        model: 机器人模型
        q: 关节角 (rad)

    Returns:
        各连杆坐标系、关节轴与原点以及末端位姿
    """
    q = model.check_dimension(q, "q")
    n = model.dof
    axes = np.zeros((n, 3))
    origins = np.zeros((n, 3))
    link_poses = []

    current = Pose()
    for i, joint in enumerate(model.joints):
        joint_frame = compose(current, joint.parent_transform)
        axes[i] = joint_frame.rotation @ joint.axis
        origins[i] = joint_frame.translation
        current = Pose(rotation=joint_frame.rotation @ axis_rotation(joint.axis, q[i]),
                       translation=joint_frame.translation)
        link_poses.append(current)

    ee_pose = compose(current, model.ee_offset)
    return ChainFrames(link_poses=link_poses, axes=axes, origins=origins, ee_pose=ee_pose)


def forward_kinematics(model: RobotModel, q: np.ndarray) -> Pose:
    """
    正运动学：计算末端执行器位姿

    Args:
        model: 机器人模型
        q: 关节角 (rad)

    Returns:
        末端执行器位姿
    """
    return chain_frames(model, q).ee_pose


def jacobian_from_frames(frames: ChainFrames) -> np.ndarray:
    """由已计算的连杆坐标系组装几何雅可比"""
    n = frames.axes.shape[0]
    J = np.zeros((6, n))
    if n == 0:
        return J
    p_ee = frames.ee_pose.translation
    J[0:3, :] = np.cross(frames.axes, p_ee - frames.origins).T
    J[3:6, :] = frames.axes.T
    return J


def geometric_jacobian(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """
    几何雅可比矩阵 (6×n)，世界坐标系，线速度行在前

    Args:
        model: 机器人模型
        q: 关节角 (rad)

    Returns:
        6×n 雅可比矩阵
    """
    return jacobian_from_frames(chain_frames(model, q))
