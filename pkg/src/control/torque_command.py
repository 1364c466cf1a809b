"""
File: src/control/torque_command.py
力矩指令合成
τ_d = C(q,q̇) + G(q) + K_JS·q̃ − D_JS·q̇ + Jᵀ(W_FIC − D_TS·Ẋ)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

# 本地模块导入
from ..config import get_config
from ..kinematics.se3 import Pose, pose_error
from ..kinematics.robot_model import RobotModel
from ..kinematics.chain import chain_frames, jacobian_from_frames
from ..dynamics.rigid_body import mass_matrix, nonlinear_effects
from .fic import FicParams, FicAxisState, fic_wrench, initial_states

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("torque_command")


@dataclass(frozen=True)
class ControllerGains:
    """姿态控制与阻尼增益"""
    K_JS: np.ndarray         # N·m/rad
    D_JS: np.ndarray         # N·m·s/rad
    D_TS: np.ndarray         # 6维：线阻尼 N·s/m，角阻尼 N·m·s/rad
    nldc_enabled: bool = True

    def __post_init__(self):
        K = np.asarray(self.K_JS, dtype=float)
        D = np.asarray(self.D_JS, dtype=float)
        D_TS = np.asarray(self.D_TS, dtype=float).reshape(6)
        if K.shape != D.shape:
            raise ValueError(f"K_JS {K.shape} 与 D_JS {D.shape} 维度不一致")
        if np.any(K < 0.0) or np.any(D < 0.0) or np.any(D_TS < 0.0):
            raise ValueError("控制增益不能为负")
        object.__setattr__(self, "K_JS", K)
        object.__setattr__(self, "D_JS", D)
        object.__setattr__(self, "D_TS", D_TS)

    @classmethod
    def from_config(cls, model: RobotModel, nldc_enabled: Optional[bool] = None) -> "ControllerGains":
        """
        由全局配置构造增益，D_JS = 2·√(K_JS·diag M(q_home))（临界阻尼）

        Args:
            model: 机器人模型
            nldc_enabled: 覆盖配置中的非线性动力学补偿开关

        Returns:
            控制增益
        """
        ctrl = get_config().get("controller")
        K_JS = np.full(model.dof, float(ctrl["K_JS"]))
        inertia = np.diag(mass_matrix(model, model.home))
        D_JS = 2.0 * np.sqrt(K_JS * inertia)
        D_TS = np.array([ctrl["D_TS_linear"]] * 3 + [ctrl["D_TS_angular"]] * 3, dtype=float)
        enabled = ctrl["nldc_enabled"] if nldc_enabled is None else nldc_enabled
        return cls(K_JS=K_JS, D_JS=D_JS, D_TS=D_TS, nldc_enabled=bool(enabled))


def torque_command(model: RobotModel, gains: ControllerGains, fic_linear: FicParams,
                   fic_angular: FicParams, fic_states: Tuple[FicAxisState, ...],
                   q: np.ndarray, qd: np.ndarray, q_d: np.ndarray,
                   X_d: Pose) -> Tuple[np.ndarray, Tuple[FicAxisState, ...], np.ndarray]:
    """
    计算期望关节力矩

    Args:
        model: 机器人模型
        gains: 控制增益
        fic_linear: 线性轴FIC参数
        fic_angular: 角度轴FIC参数
        fic_states: 六轴FIC状态
        q, qd: 实际关节角与速度
        q_d: QP-IK给出的期望姿态
        X_d: 期望末端位姿

    Returns:
        (关节力矩, 新FIC状态, FIC力旋量 [力; 力矩])
    """
    q = model.check_dimension(q, "q")
    qd = model.check_dimension(qd, "qd")
    q_d = model.check_dimension(q_d, "q_d")

    frames = chain_frames(model, q)
    J = jacobian_from_frames(frames)
    error = pose_error(frames.ee_pose, X_d).as_vector()

    wrench, new_states = fic_wrench(fic_linear, fic_angular, fic_states, error)
    ee_velocity = J @ qd

    tau = gains.K_JS * (q_d - q) - gains.D_JS * qd + J.T @ (wrench - gains.D_TS * ee_velocity)
    if gains.nldc_enabled:
        tau = tau + nonlinear_effects(model, q, qd, frames)
    return tau, new_states, wrench


class FicController:
    """保存FIC状态的力矩控制器，按1 kHz调用"""

    def __init__(self, model: RobotModel, fic_linear: FicParams, fic_angular: Optional[FicParams] = None,
                 gains: Optional[ControllerGains] = None):
        self.config = get_config()
        self.model = model
        self.fic_linear = fic_linear
        self.fic_angular = fic_angular or FicParams.from_preset("angular")
        self.gains = gains or ControllerGains.from_config(model)
        self.states = initial_states()
        self.last_wrench = np.zeros(6)

        logger.debug(f"FIC控制器初始化: K0={fic_linear.K0}, x_b={fic_linear.x_b}, "
                     f"F_max={fic_linear.F_max}, NLDC={self.gains.nldc_enabled}")

    def update_params(self, fic_linear: FicParams, fic_angular: Optional[FicParams] = None) -> None:
        """在线更新FIC参数，不重置吸引子相位"""
        self.fic_linear = fic_linear
        if fic_angular is not None:
            self.fic_angular = fic_angular

    def command(self, q: np.ndarray, qd: np.ndarray, q_d: np.ndarray, X_d: Pose) -> np.ndarray:
        """计算力矩指令并推进FIC状态"""
        tau, self.states, self.last_wrench = torque_command(
            self.model, self.gains, self.fic_linear, self.fic_angular, self.states, q, qd, q_d, X_d)
        return tau
