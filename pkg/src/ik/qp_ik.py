"""
File: src/ik/qp_ik.py
QP逆运动学
将期望末端位姿解算为满足关节位置与速度限制的期望姿态：
min w_task‖J·Δq − k·e‖²_W + w_reg‖Δq‖²，s.t. 盒约束
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

# 本地模块导入
from ..config import get_config
from ..kinematics.se3 import Pose, Twist, pose_error
from ..kinematics.robot_model import RobotModel
from ..kinematics.chain import chain_frames, jacobian_from_frames
from .box_qp import solve_box_ls

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("qp_ik")


@dataclass(frozen=True)
class IkWeights:
    """QP-IK权重"""
    w_task: float = 1.0
    w_reg: float = 1e-4
    dt: float = 0.01                      # s
    gain: float = 1.0                     # 任务误差反馈增益 (1/s)
    axis_weights: Sequence[float] = field(default_factory=lambda: (1.0,) * 6)
    max_iterations: Optional[int] = None  # 主动集迭代上限，None时按变量数确定

    def __post_init__(self):
        if self.w_task < 0.0:
            raise ValueError(f"w_task 不能为负: {self.w_task}")
        if not self.w_reg > 0.0:
            raise ValueError(f"w_reg 必须为正: {self.w_reg}")
        if not self.dt > 0.0:
            raise ValueError(f"dt 必须为正: {self.dt}")
        if not self.gain > 0.0:
            raise ValueError(f"gain 必须为正: {self.gain}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations 必须为正整数: {self.max_iterations}")
        weights = np.asarray(self.axis_weights, dtype=float).reshape(6)
        if np.any(weights < 0.0):
            raise ValueError("axis_weights 不能为负")
        object.__setattr__(self, "axis_weights", weights)

    @classmethod
    def from_config(cls, dof: int, dt: float, **overrides) -> "IkWeights":
        """由全局配置构造，w_reg 按自由度缩放"""
        ik = get_config().get("ik")
        values = {
            "w_task": ik["w_task"],
            "w_reg": ik["w_reg_per_dof"] * max(dof, 1),
            "dt": dt,
            "gain": ik["gain"],
            "axis_weights": ik["axis_weights"],
            "max_iterations": ik["max_iterations"],
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class IkState:
    """期望关节姿态"""
    q_d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_d", np.asarray(self.q_d, dtype=float))


def velocity_bounds(q_d: np.ndarray, q_min: np.ndarray, q_max: np.ndarray,
                    qd_max: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    关节速度盒约束：速度限制与位置限制（按 dt 换算）取交集

    Returns:
        (lo, hi)
    """
    lo = np.maximum(-qd_max, (q_min - q_d) / dt)
    hi = np.minimum(qd_max, (q_max - q_d) / dt)
    # 姿态恰好越界时（数值误差）仍保证 lo ≤ hi
    hi = np.maximum(hi, lo)
    return lo, hi


def solve_ik_increment(J: np.ndarray, e: np.ndarray, q_d: np.ndarray, q_min: np.ndarray,
                       q_max: np.ndarray, qd_max: np.ndarray, weights: IkWeights) -> np.ndarray:
    """
    求解关节速度增量 Δq

    Args:
        J: 6×n 雅可比（线速度行在前）
        e: 6维任务误差（线速度在前）
        q_d: 当前期望姿态
        q_min, q_max, qd_max: 关节限制
        weights: QP-IK权重

    Returns:
        Δq (rad/s)
    """
    n = J.shape[1]
    W = weights.axis_weights
    JW = J.T * W
    H = weights.w_task * JW @ J + weights.w_reg * np.eye(n)
    g = -weights.w_task * JW @ (weights.gain * np.asarray(e, dtype=float))
    lo, hi = velocity_bounds(q_d, q_min, q_max, qd_max, weights.dt)
    # 目标 ‖·‖² 展开后的Hessian为2H，比例因子不影响极小点
    return solve_box_ls(H, g, lo, hi, max_iter=weights.max_iterations)


def ik_step(model: RobotModel, state: IkState, X_d: Pose,
            weights: IkWeights) -> Tuple[IkState, Twist]:
    """
    QP-IK单步：q_d ← q_d + Δq·dt

    Args:
        model: 机器人模型
        state: 当前期望姿态
        X_d: 期望末端位姿
        weights: QP-IK权重

    Returns:
        (新期望姿态, 本步求解所用的位姿误差)
    """
    if not X_d.is_valid(1e-6):
        raise ValueError("期望位姿无效（旋转矩阵非正交或含非有限数值）")
    q_d = model.check_dimension(state.q_d, "q_d")

    frames = chain_frames(model, q_d)
    error = pose_error(frames.ee_pose, X_d)
    J = jacobian_from_frames(frames)

    dq = solve_ik_increment(J, error.as_vector(), q_d, model.q_min, model.q_max,
                            model.qd_max, weights)
    q_new = np.clip(q_d + dq * weights.dt, model.q_min, model.q_max)
    return IkState(q_d=q_new), error


class QpIkSolver:
    """按规划频率运行的QP-IK求解器，保存期望姿态"""

    def __init__(self, model: RobotModel, weights: Optional[IkWeights] = None,
                 q0: Optional[np.ndarray] = None, dt: Optional[float] = None):
        self.config = get_config()
        self.model = model
        if dt is None:
            dt = 1.0 / float(self.config.get("simulation", "planning_rate"))
        self.weights = weights or IkWeights.from_config(model.dof, dt)
        q0 = model.home if q0 is None else q0
        self.state = IkState(q_d=np.clip(model.check_dimension(q0, "q0"), model.q_min, model.q_max))
        self.last_error = Twist()

        logger.debug(f"QP-IK初始化: w_task={self.weights.w_task}, w_reg={self.weights.w_reg:.2e}, "
                     f"gain={self.weights.gain}, dt={self.weights.dt}")

    @property
    def q_d(self) -> np.ndarray:
        return self.state.q_d

    def step(self, X_d: Pose) -> np.ndarray:
        """跟踪期望位姿一步，返回新的期望姿态"""
        self.state, self.last_error = ik_step(self.model, self.state, X_d, self.weights)
        return self.state.q_d
