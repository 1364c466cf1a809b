"""
File: src/dynamics/rigid_body.py
刚体动力学
递归牛顿-欧拉逆动力学、复合刚体质量矩阵、偏置项与速度Verlet前向动力学（仿真被控对象）
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

# 本地模块导入
from ..kinematics.robot_model import RobotModel
from ..kinematics.chain import ChainFrames, chain_frames, jacobian_from_frames

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("rigid_body")

# 单步积分步长上限 (s)
MAX_DT = 0.01


class SimulationFault(RuntimeError):
    """仿真故障：质量矩阵奇异或状态出现非有限值"""


@dataclass(frozen=True)
class DynState:
    """被控对象状态"""
    q: np.ndarray
    qd: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qd = np.asarray(self.qd, dtype=float)
        if q.shape != qd.shape:
            raise ValueError(f"q {q.shape} 与 qd {qd.shape} 维度不一致")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)


@dataclass(frozen=True)
class Wrench:
    """作用于末端执行器的外部力旋量（世界坐标系）"""
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    def is_zero(self) -> bool:
        return not (np.any(self.force) or np.any(self.torque))


@dataclass(frozen=True)
class ExternalWrench:
    """外部力旋量时间表：(t_start, t_end, wrench) 列表，区间左闭右开"""
    schedule: Sequence[Tuple[float, float, Wrench]] = ()

    def __post_init__(self):
        entries = tuple(self.schedule)
        for t_start, t_end, _ in entries:
            if not t_start < t_end:
                raise ValueError(f"外力区间无效: [{t_start}, {t_end})")
        object.__setattr__(self, "schedule", entries)

    def at(self, t: float) -> Wrench:
        """返回时刻 t 的合外力旋量"""
        force = np.zeros(3)
        torque = np.zeros(3)
        for t_start, t_end, wrench in self.schedule:
            if t_start <= t < t_end:
                force = force + wrench.force
                torque = torque + wrench.torque
        return Wrench(force=force, torque=torque)


def _check_finite(model: RobotModel, *vectors: Tuple[np.ndarray, str]) -> List[np.ndarray]:
    return [model.check_dimension(v, label) for v, label in vectors]


def _rnea(model: RobotModel, frames: ChainFrames, qd: np.ndarray, qdd: np.ndarray,
          gravity: np.ndarray, external: Optional[Wrench] = None) -> np.ndarray:
    """
    世界坐标系下的递归牛顿-欧拉算法

    重力通过基座加速度 -g 引入；外部力旋量作为末端处的"子连杆"反作用。
    """
    n = model.dof
    tau = np.zeros(n)
    if n == 0:
        return tau

    forces = np.zeros((n, 3))
    moments = np.zeros((n, 3))
    coms = np.zeros((n, 3))

    # 前向递推：速度与加速度
    omega = np.zeros(3)
    alpha = np.zeros(3)
    acc = -np.asarray(gravity, dtype=float)
    p_prev = frames.origins[0]
    for i, joint in enumerate(model.joints):
        p_i = frames.origins[i]
        z_i = frames.axes[i]
        r = p_i - p_prev
        acc = acc + np.cross(alpha, r) + np.cross(omega, np.cross(omega, r))

        spin = z_i * qd[i]
        alpha = alpha + z_i * qdd[i] + np.cross(omega, spin)
        omega = omega + spin

        R = frames.link_poses[i].rotation
        rc = R @ joint.com
        coms[i] = p_i + rc
        a_com = acc + np.cross(alpha, rc) + np.cross(omega, np.cross(omega, rc))
        inertia = R @ joint.inertia @ R.T

        forces[i] = joint.mass * a_com
        moments[i] = inertia @ alpha + np.cross(omega, inertia @ omega)
        p_prev = p_i

    # 反向递推：关节力与力矩
    if external is None:
        f_next = np.zeros(3)
        n_next = np.zeros(3)
    else:
        f_next = -external.force
        n_next = -external.torque
    p_next = frames.ee_pose.translation
    for i in range(n - 1, -1, -1):
        p_i = frames.origins[i]
        f_i = forces[i] + f_next
        n_i = (moments[i] + np.cross(coms[i] - p_i, forces[i])
               + n_next + np.cross(p_next - p_i, f_next))
        tau[i] = frames.axes[i] @ n_i
        f_next, n_next, p_next = f_i, n_i, p_i
    return tau


def inverse_dynamics(model: RobotModel, q: np.ndarray, qd: np.ndarray, qdd: np.ndarray,
                     external: Optional[Wrench] = None) -> np.ndarray:
    """
    逆动力学 τ = M(q)q̈ + C(q,q̇) + G(q) - Jᵀ·w_ext

    Args:
        model: 机器人模型
        q: 关节角 (rad)
        qd: 关节速度 (rad/s)
        qdd: 关节加速度 (rad/s²)
        external: 末端外部力旋量（可选）

    Returns:
        关节力矩 (N·m)
    """
    q, qd, qdd = _check_finite(model, (q, "q"), (qd, "qd"), (qdd, "qdd"))
    if external is not None and not np.all(np.isfinite(external.as_vector())):
        raise ValueError("外部力旋量含有非有限数值")
    frames = chain_frames(model, q)
    return _rnea(model, frames, qd, qdd, model.gravity, external)


def _mass_matrix_from_frames(model: RobotModel, frames: ChainFrames) -> np.ndarray:
    """复合刚体算法：自末端向基座累积子树惯性"""
    n = model.dof
    M = np.zeros((n, n))
    masses = np.array([j.mass for j in model.joints])
    coms = np.zeros((n, 3))
    inertias = np.zeros((n, 3, 3))
    for i, joint in enumerate(model.joints):
        R = frames.link_poses[i].rotation
        coms[i] = frames.origins[i] + R @ joint.com
        inertias[i] = R @ joint.inertia @ R.T

    eye = np.eye(3)
    m_c = 0.0
    first_moment = np.zeros(3)
    # 相对世界原点的复合惯量
    inertia_o = np.zeros((3, 3))
    for i in range(n - 1, -1, -1):
        c = coms[i]
        m_c += masses[i]
        first_moment += masses[i] * c
        inertia_o += inertias[i] + masses[i] * (np.dot(c, c) * eye - np.outer(c, c))

        c_c = first_moment / m_c
        inertia_c = inertia_o - m_c * (np.dot(c_c, c_c) * eye - np.outer(c_c, c_c))

        z_i = frames.axes[i]
        f = m_c * np.cross(z_i, c_c - frames.origins[i])
        n_c = inertia_c @ z_i
        for j in range(i, -1, -1):
            moment = n_c + np.cross(c_c - frames.origins[j], f)
            M[j, i] = frames.axes[j] @ moment
            M[i, j] = M[j, i]
    return M


def mass_matrix(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """
    关节空间质量矩阵（复合刚体算法）

    Args:
        model: 机器人模型
        q: 关节角 (rad)

    Returns:
        n×n 对称正定矩阵 (kg·m²)
    """
    q = model.check_dimension(q, "q")
    return _mass_matrix_from_frames(model, chain_frames(model, q))


def bias_terms(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    偏置项：科氏/离心力矩与重力力矩

    Args:
        model: 机器人模型
        q: 关节角 (rad)
        qd: 关节速度 (rad/s)

    Returns:
        (coriolis, gravity) 两个关节力矩向量
    """
    q, qd = _check_finite(model, (q, "q"), (qd, "qd"))
    frames = chain_frames(model, q)
    zeros = np.zeros(model.dof)
    coriolis = _rnea(model, frames, qd, zeros, np.zeros(3))
    gravity = _rnea(model, frames, zeros, zeros, model.gravity)
    return coriolis, gravity


def nonlinear_effects(model: RobotModel, q: np.ndarray, qd: np.ndarray,
                      frames: Optional[ChainFrames] = None) -> np.ndarray:
    """C(q,q̇) + G(q)，可复用已计算的连杆坐标系"""
    if frames is None:
        frames = chain_frames(model, model.check_dimension(q, "q"))
    return _rnea(model, frames, np.asarray(qd, dtype=float), np.zeros(model.dof), model.gravity)


def _solve_mass_matrix(M: np.ndarray, rhs: np.ndarray, condition_limit: float) -> np.ndarray:
    """Cholesky分解求解 M·x = rhs，奇异或病态时抛出仿真故障"""
    try:
        factor = cho_factor(M)
    except LinAlgError as e:
        raise SimulationFault(f"质量矩阵非正定，无法求解前向动力学: {e}") from e

    diag = np.abs(np.diag(factor[0]))
    if diag.size and (np.min(diag) <= 0.0 or (np.max(diag) / np.min(diag)) ** 2 > condition_limit):
        raise SimulationFault(
            f"质量矩阵病态 (条件数估计 {(np.max(diag) / max(np.min(diag), 1e-300)) ** 2:.3e} > {condition_limit:.1e})"
        )
    return cho_solve(factor, rhs)


def _forward_acceleration(model: RobotModel, q: np.ndarray, qd: np.ndarray, tau: np.ndarray,
                          external: Optional[Wrench], condition_limit: float) -> np.ndarray:
    """q̈ = M⁻¹(τ + Jᵀw_ext - C - G - b·q̇)"""
    frames = chain_frames(model, q)
    nonlinear = _rnea(model, frames, qd, np.zeros(model.dof), model.gravity)
    rhs = tau - nonlinear - model.damping * qd
    if external is not None and not external.is_zero():
        rhs = rhs + jacobian_from_frames(frames).T @ external.as_vector()
    return _solve_mass_matrix(_mass_matrix_from_frames(model, frames), rhs, condition_limit)


def step_forward_dynamics(model: RobotModel, state: DynState, tau: np.ndarray,
                          external: Optional[Wrench] = None, dt: float = 0.001,
                          condition_limit: float = 1e12) -> DynState:
    """
    速度Verlet前向动力学积分一步（力矩与外力在步内零阶保持）

    半步速度 q̇½ = q̇ + q̈(q, q̇)·dt/2；q ← q + q̇½·dt；
    q̇ ← q̇½ + q̈(q_new, q̇ + q̈·dt)·dt/2，末端加速度在欧拉预测速度处求值

    Args:
        model: 机器人模型
        state: 当前状态
        tau: 关节力矩指令，按 ±tau_max 饱和
        external: 末端外部力旋量（可选）
        dt: 积分步长，(0, 0.01] s
        condition_limit: 质量矩阵条件数上限

    Returns:
        新状态
    """
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"积分步长 dt={dt} 超出 (0, {MAX_DT}] 范围")
    q, qd, tau = _check_finite(model, (state.q, "q"), (state.qd, "qd"), (tau, "tau"))

    tau_max = model.tau_max
    tau = np.clip(tau, -tau_max, tau_max)

    qdd = _forward_acceleration(model, q, qd, tau, external, condition_limit)
    qd_half = qd + 0.5 * dt * qdd
    q_new = q + qd_half * dt
    if not np.all(np.isfinite(q_new)):
        raise SimulationFault(f"t={state.t:.4f}s 时状态出现非有限值")
    qdd_new = _forward_acceleration(model, q_new, qd + qdd * dt, tau, external, condition_limit)
    qd_new = qd_half + 0.5 * dt * qdd_new
    if not np.all(np.isfinite(qd_new)):
        raise SimulationFault(f"t={state.t:.4f}s 时状态出现非有限值")
    return DynState(q=q_new, qd=qd_new, t=state.t + dt)

def kinetic_energy(model: RobotModel, q: np.ndarray, qd: np.ndarray) -> float:
    """动能 ½q̇ᵀM(q)q̇"""
    qd = np.asarray(qd, dtype=float)
    return 0.5 * float(qd @ mass_matrix(model, q) @ qd)


def potential_energy(model: RobotModel, q: np.ndarray) -> float:
    """重力势能 -Σ m·gᵀc"""
    frames = chain_frames(model, q)
    energy = 0.0
    for i, joint in enumerate(model.joints):
        c = frames.origins[i] + frames.link_poses[i].rotation @ joint.com
        energy -= joint.mass * float(model.gravity @ c)
    return energy
