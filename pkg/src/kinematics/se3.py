"""
File: src/kinematics/se3.py
刚体变换代数
提供位姿、旋量、SO(3)/SE(3)指数与对数映射以及位姿误差
"""

import logging
from dataclasses import dataclass, field

import numpy as np

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("se3")

# 小角度阈值
_SMALL_ANGLE = 1e-9


def hat(w: np.ndarray) -> np.ndarray:
    """三维向量转反对称矩阵"""
    x, y, z = w
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(W: np.ndarray) -> np.ndarray:
    """反对称矩阵转三维向量"""
    return 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])


def so3_exp(w: np.ndarray) -> np.ndarray:
    """
    SO(3)指数映射（Rodrigues公式）

    Args:
        w: 旋转向量 (轴·角)

    Returns:
        3×3旋转矩阵
    """
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + W + 0.5 * W @ W
    return (np.eye(3) + (np.sin(theta) / theta) * W
            + ((1.0 - np.cos(theta)) / theta ** 2) * W @ W)


def axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """绕单位轴旋转给定角度"""
    return so3_exp(np.asarray(axis, dtype=float) * angle)


def so3_log(R: np.ndarray) -> np.ndarray:
    """
    SO(3)对数映射，返回旋转向量

    旋转角为π时轴向不唯一：取旋转矩阵最大对角元素所在列确定轴向。

    Args:
        R: 3×3旋转矩阵

    Returns:
        旋转向量 (轴·角)
    """
    cos_theta = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    if theta < _SMALL_ANGLE:
        return vee(R - R.T)

    sin_theta = np.sin(theta)
    if sin_theta > 1e-6:
        return vee(R - R.T) * (theta / sin_theta)

    # 接近π: R ≈ 2nnᵀ - I
    k = int(np.argmax(np.diag(R)))
    n = np.empty(3)
    n[k] = np.sqrt(max((R[k, k] + 1.0) * 0.5, 0.0))
    for j in range(3):
        if j != k:
            n[j] = (R[k, j] + R[j, k]) / (4.0 * n[k])
    n /= np.linalg.norm(n)
    # 非精确π时用反对称部分确定符号
    s = vee(R - R.T)
    if np.dot(s, n) < 0.0:
        n = -n
    return n * theta


def _left_jacobian(w: np.ndarray) -> np.ndarray:
    """SO(3)左雅可比矩阵 V"""
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < 1e-6:
        return np.eye(3) + 0.5 * W + W @ W / 6.0
    return (np.eye(3) + ((1.0 - np.cos(theta)) / theta ** 2) * W
            + ((theta - np.sin(theta)) / theta ** 3) * W @ W)


@dataclass(frozen=True)
class Twist:
    """旋量：角速度部分与线速度部分"""
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))
    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=float).reshape(3))
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(3))

    def as_vector(self) -> np.ndarray:
        """按线速度在前、角速度在后排列为6维向量（与雅可比行序一致）"""
        return np.concatenate([self.linear, self.angular])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Twist":
        v = np.asarray(v, dtype=float)
        return cls(angular=v[3:6], linear=v[0:3])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_vector()))


@dataclass(frozen=True)
class Pose:
    """SE(3)位姿：旋转矩阵与平移向量 (m)"""
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        p = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_matrix(cls, T: np.ndarray) -> "Pose":
        return cls(rotation=T[:3, :3], translation=T[:3, 3])

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def is_valid(self, tol: float = 1e-9) -> bool:
        """检查旋转矩阵正交且行列式为+1"""
        R = self.rotation
        return (np.allclose(R @ R.T, np.eye(3), atol=tol)
                and abs(np.linalg.det(R) - 1.0) < tol
                and bool(np.all(np.isfinite(self.translation))))

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


def compose(a: Pose, b: Pose) -> Pose:
    """位姿复合 a∘b"""
    return Pose(rotation=a.rotation @ b.rotation,
                translation=a.rotation @ b.translation + a.translation)


def inverse(pose: Pose) -> Pose:
    """位姿求逆"""
    Rt = pose.rotation.T
    return Pose(rotation=Rt, translation=-Rt @ pose.translation)


def twist_exp(xi: Twist) -> Pose:
    """SE(3)指数映射"""
    R = so3_exp(xi.angular)
    p = _left_jacobian(xi.angular) @ xi.linear
    return Pose(rotation=R, translation=p)


def twist_log(pose: Pose) -> Twist:
    """SE(3)对数映射，旋转角须小于π"""
    w = so3_log(pose.rotation)
    v = np.linalg.solve(_left_jacobian(w), pose.translation)
    return Twist(angular=w, linear=v)


def pose_error(current: Pose, desired: Pose) -> Twist:
    """
    计算世界坐标系下的位姿误差

    线速度部分为 p_d - p_c (m)，角速度部分为 log(R_d·R_cᵀ) 的旋转向量；
    当前位姿按 R ← exp(ω)·R, p ← p + v 施加该误差即得到期望位姿。

    Args:
        current: 当前位姿
        desired: 期望位姿

    Returns:
        误差旋量
    """
    linear = desired.translation - current.translation
    angular = so3_log(desired.rotation @ current.rotation.T)
    return Twist(angular=angular, linear=linear)


def perturb(pose: Pose, error: Twist) -> Pose:
    """按世界坐标系误差旋量扰动位姿（pose_error的逆运算）"""
    return Pose(rotation=so3_exp(error.angular) @ pose.rotation,
                translation=pose.translation + error.linear)
