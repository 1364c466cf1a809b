"""
File: src/kinematics/robot_model.py
机器人模型
串联转动关节链的运动学/动力学描述，以及模型文件（JSON键值树）的解析
"""

import os
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Any, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

# 本地模块导入
from ..config import get_config
from .se3 import Pose

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("robot_model")


@dataclass(frozen=True)
class Joint:
    """转动关节及其后继连杆"""
    name: str
    axis: np.ndarray                 # 关节坐标系下的单位轴
    parent_transform: Pose           # 前一连杆坐标系到本关节坐标系
    mass: float                      # kg
    com: np.ndarray                  # 连杆坐标系下质心 (m)
    inertia: np.ndarray              # 质心处惯量张量 (kg·m²)，连杆坐标系
    q_min: float                     # rad
    q_max: float                     # rad
    qd_max: float                    # rad/s
    tau_max: float                   # N·m
    damping: float = 0.0             # 粘性摩擦 (N·m·s/rad)，仅用于被控对象

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise ValueError(f"关节 {self.name} 的轴向量为零")
        object.__setattr__(self, "axis", axis / norm)
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        object.__setattr__(self, "inertia", inertia)

        if not self.q_min < self.q_max:
            raise ValueError(f"关节 {self.name} 的位置限位无效: {self.q_min} >= {self.q_max}")
        if self.mass <= 0.0:
            raise ValueError(f"关节 {self.name} 的连杆质量必须为正: {self.mass}")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ValueError(f"关节 {self.name} 的惯量张量不对称")
        if np.min(np.linalg.eigvalsh(inertia)) < -1e-12:
            raise ValueError(f"关节 {self.name} 的惯量张量不是半正定的")
        if self.qd_max <= 0.0 or self.tau_max <= 0.0:
            raise ValueError(f"关节 {self.name} 的速度或力矩限制必须为正")


@dataclass(frozen=True)
class RobotModel:
    """串联机器人模型"""
    joints: Sequence[Joint]
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    ee_offset: Pose = field(default_factory=Pose)
    home: Optional[np.ndarray] = None
    name: str = "robot"

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float).reshape(3))
        home = np.zeros(self.dof) if self.home is None else np.asarray(self.home, dtype=float)
        if home.shape != (self.dof,):
            raise ValueError(f"初始姿态维度 {home.shape} 与自由度 {self.dof} 不符")
        object.__setattr__(self, "home", home)

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def q_min(self) -> np.ndarray:
        return np.array([j.q_min for j in self.joints])

    @property
    def q_max(self) -> np.ndarray:
        return np.array([j.q_max for j in self.joints])

    @property
    def qd_max(self) -> np.ndarray:
        return np.array([j.qd_max for j in self.joints])

    @property
    def tau_max(self) -> np.ndarray:
        return np.array([j.tau_max for j in self.joints])

    @property
    def damping(self) -> np.ndarray:
        return np.array([j.damping for j in self.joints])

    def with_gravity(self, gravity: np.ndarray) -> "RobotModel":
        """返回替换重力向量后的模型副本"""
        return RobotModel(joints=self.joints, gravity=gravity, ee_offset=self.ee_offset,
                          home=self.home, name=self.name)

    def check_dimension(self, vector: np.ndarray, label: str = "q") -> np.ndarray:
        """校验关节向量维度与有限性"""
        v = np.asarray(vector, dtype=float)
        if v.shape != (self.dof,):
            raise ValueError(f"{label} 的维度 {v.shape} 与模型自由度 {self.dof} 不符")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{label} 含有非有限数值")
        return v


def _pose_from_xyz_rpy(xyz: Sequence[float], rpy: Sequence[float]) -> Pose:
    """由平移和RPY角（固定轴 x-y-z）构造位姿"""
    rotation = Rotation.from_euler("xyz", rpy).as_matrix()
    return Pose(rotation=rotation, translation=np.asarray(xyz, dtype=float))


def _inertia_from_upper(values: Sequence[float]) -> np.ndarray:
    """由上三角6元素 [ixx, ixy, ixz, iyy, iyz, izz] 构造惯量张量"""
    ixx, ixy, ixz, iyy, iyz, izz = [float(v) for v in values]
    return np.array([[ixx, ixy, ixz],
                     [ixy, iyy, iyz],
                     [ixz, iyz, izz]])


def model_from_dict(data: Dict[str, Any], name: str = "robot") -> RobotModel:
    """
    由键值树构造机器人模型

    Args:
        data: 含 joints 列表与全局 gravity 等字段的字典
        name: 模型名称

    Returns:
        机器人模型
    """
    joints = []
    for index, record in enumerate(data.get("joints", [])):
        try:
            joints.append(Joint(
                name=record.get("name", f"joint_{index}"),
                axis=record["axis"],
                parent_transform=_pose_from_xyz_rpy(record.get("origin_xyz", [0.0, 0.0, 0.0]),
                                                    record.get("origin_rpy", [0.0, 0.0, 0.0])),
                mass=float(record["mass"]),
                com=record.get("com", [0.0, 0.0, 0.0]),
                inertia=_inertia_from_upper(record["inertia"]),
                q_min=float(record["q_min"]),
                q_max=float(record["q_max"]),
                qd_max=float(record["qd_max"]),
                tau_max=float(record["tau_max"]),
                damping=float(record.get("damping", 0.0)),
            ))
        except KeyError as e:
            raise ValueError(f"模型 {name} 的第 {index} 个关节缺少字段 {e}") from e

    ee = data.get("ee_offset", [0.0, 0.0, 0.0])
    return RobotModel(
        joints=joints,
        gravity=data.get("gravity", [0.0, 0.0, -9.81]),
        ee_offset=Pose(translation=ee),
        home=data.get("home"),
        name=data.get("name", name),
    )


def resolve_model_path(path: str, base_dir: Optional[str] = None) -> str:
    """
    解析模型文件路径：依次尝试原路径、相对 base_dir、内置模型目录

    Args:
        path: 模型文件路径或内置模型名
        base_dir: 相对路径的基准目录（可选）

    Returns:
        存在的绝对路径
    """
    candidates = [path]
    if base_dir and not os.path.isabs(path):
        candidates.append(os.path.join(base_dir, path))
    models_dir = get_config().get("paths", "models_dir")
    candidates.append(os.path.join(models_dir, os.path.basename(path)))
    if not path.endswith(".model"):
        candidates.append(os.path.join(models_dir, os.path.basename(path) + ".model"))

    for candidate in candidates:
        if os.path.isfile(candidate):
            return os.path.abspath(candidate)
    raise FileNotFoundError(f"模型文件不存在: {path}")


def load_model(path: str, base_dir: Optional[str] = None) -> RobotModel:
    """
    从模型文件加载机器人模型

    Args:
        path: 模型文件路径（或内置模型名 planar2 / arm7 / arm7_friction）
        base_dir: 相对路径的基准目录（可选）

    Returns:
        机器人模型
    """
    file_path = resolve_model_path(path, base_dir)
    with open(file_path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"模型文件格式错误 {file_path}: 第 {e.lineno} 行: {e.msg}") from e

    name = os.path.splitext(os.path.basename(file_path))[0]
    model = model_from_dict(data, name=name)
    logger.info(f"加载机器人模型 {model.name}: {model.dof} 自由度")
    return model
