"""
File: src/simulation/harness.py
仿真实验框架
串联 规划器 → QP-IK → FIC力矩指令 → 仿真被控对象 的完整闭环，注入扰动并记录仿真日志；
同时提供两种规划器的纯运动学对比
"""

import os
import json
import time
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

# 本地模块导入
from ..config import get_config
from ..kinematics.se3 import Pose, so3_log
from ..kinematics.robot_model import RobotModel, load_model
from ..kinematics.chain import forward_kinematics
from ..dynamics.rigid_body import DynState, ExternalWrench, Wrench, SimulationFault, step_forward_dynamics
from ..planning.harmonic_planner import HarmonicPlanner, PlannerParams
from ..planning.bangbang_planner import BangBangPlanner
from ..ik.qp_ik import IkWeights, QpIkSolver
from ..control.fic import FicParams
from ..control.torque_command import ControllerGains, FicController
from ..trajectory.trajectory_io import (TrajectoryStream, load_csv, scale, stream_targets,
                                        stream_orientation)
from ..trajectory.synth import parse_synth_spec, synth_trajectory
from ..utils.geometry_utils import rmse
from .report import COMPARISON_COLUMNS

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("harness")

PLANNERS = ("harmonic", "bangbang")
PERTURBATION_TYPES = ("wrench", "board_shift")


@dataclass(frozen=True)
class Perturbation:
    """扰动：末端冲击力旋量或目标坐标系（白板）平移"""
    kind: str
    start: float
    duration: float
    force: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    torque: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in PERTURBATION_TYPES:
            raise ValueError(f"未知扰动类型: {self.kind}，可选 {PERTURBATION_TYPES}")
        if self.start < 0.0 or not self.duration > 0.0:
            raise ValueError(f"扰动时间窗无效: start={self.start}, duration={self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Perturbation":
        defaults = get_config().get("perturbation")
        kind = data.get("type", "wrench")
        force = data.get("force")
        if kind == "wrench" and force is None and data.get("torque") is None:
            # 默认沿世界y轴（白板平面内）的冲击力
            force = (0.0, defaults["impulse_force"], 0.0)
        return cls(kind=kind,
                   start=float(data.get("start", 0.0)),
                   duration=float(data.get("duration", defaults["impulse_duration"])),
                   force=tuple(float(v) for v in (force or (0.0, 0.0, 0.0))),
                   torque=tuple(float(v) for v in data.get("torque", (0.0, 0.0, 0.0))),
                   offset=tuple(float(v) for v in data.get("offset", (0.0, 0.0, 0.0))))

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind, "start": self.start, "duration": self.duration,
                "force": list(self.force), "torque": list(self.torque), "offset": list(self.offset)}


@dataclass
class ExperimentConfig:
    """单次闭环实验配置"""
    model: str = "arm7"
    trajectory: Union[str, Dict[str, Any]] = "synth:circle"
    planner: str = "harmonic"
    planner_set: Optional[int] = None
    planner_overrides: Dict[str, float] = field(default_factory=dict)
    fic_preset: str = "set2"
    fic_overrides: Dict[str, float] = field(default_factory=dict)
    fic_angular_overrides: Dict[str, float] = field(default_factory=dict)
    ik: Dict[str, Any] = field(default_factory=dict)
    S_x: float = 1.0
    S_t: float = 1.0
    perturbations: List[Perturbation] = field(default_factory=list)
    duration: Optional[float] = None
    settle: float = 1.0
    nldc_enabled: Optional[bool] = None
    output_dir: Optional[str] = None
    base_dir: Optional[str] = None
    name: str = "experiment"

    def __post_init__(self):
        self.perturbations = [p if isinstance(p, Perturbation) else Perturbation.from_dict(p)
                              for p in self.perturbations]
        self.validate()

    def validate(self) -> None:
        """校验配置取值"""
        if self.planner not in PLANNERS:
            raise ValueError(f"未知规划器: {self.planner}，可选 {PLANNERS}")
        if self.duration is not None and not self.duration > 0.0:
            raise ValueError(f"实验时长必须为正: {self.duration}")
        if not (self.S_x > 0.0 and self.S_t > 0.0):
            raise ValueError(f"缩放系数必须为正: S_x={self.S_x}, S_t={self.S_t}")
        if self.settle < 0.0:
            raise ValueError(f"settle 不能为负: {self.settle}")

    def to_dict(self) -> Dict[str, Any]:
        data = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "perturbations"}
        data["perturbations"] = [p.to_dict() for p in self.perturbations]
        return data


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    加载JSON实验配置，相对路径以配置文件所在目录为基准

    Args:
        path: 配置文件路径

    Returns:
        实验配置
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"实验配置文件不存在: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"实验配置格式错误 {path}: 第 {e.lineno} 行: {e.msg}") from e

    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"实验配置包含未知字段: {unknown}")
    data.setdefault("base_dir", os.path.dirname(os.path.abspath(path)))
    data.setdefault("name", os.path.splitext(os.path.basename(path))[0])
    config = ExperimentConfig(**data)

    # 检查引用的文件
    source = config.trajectory
    if isinstance(source, str) and not source.startswith("synth:"):
        _resolve_path(source, config.base_dir)
    logger.info(f"加载实验配置 {path}: 规划器 {config.planner}, FIC {config.fic_preset}")
    return config


def _resolve_path(path: str, base_dir: Optional[str]) -> str:
    candidates = [path]
    if base_dir and not os.path.isabs(path):
        candidates.insert(0, os.path.join(base_dir, path))
    for candidate in candidates:
        if os.path.isfile(candidate):
            return candidate
    raise FileNotFoundError(f"轨迹文件不存在: {path}")


def build_stream(source: Union[str, Dict[str, Any], TrajectoryStream],
                 base_dir: Optional[str] = None) -> TrajectoryStream:
    """
    由文件路径、"synth:" 描述串或 {"synth": kind, ...} 字典构造轨迹流

    Args:
        source: 轨迹来源
        base_dir: 相对路径基准目录

    Returns:
        轨迹流
    """
    if isinstance(source, TrajectoryStream):
        return source
    if isinstance(source, dict):
        params = dict(source)
        if "file" in params:
            return load_csv(_resolve_path(params["file"], base_dir))
        kind = params.pop("synth", None)
        if kind is None:
            raise ValueError(f"轨迹来源需包含 file 或 synth 字段: {source}")
        return synth_trajectory(kind, params)
    if source.startswith("synth:"):
        return parse_synth_spec(source)
    return load_csv(_resolve_path(source, base_dir))


def planner_params(index: Optional[int] = None, overrides: Optional[Dict[str, float]] = None) -> PlannerParams:
    """按参数组编号加载规划器参数，并应用覆盖值"""
    if index is None:
        index = int(get_config().get("planner", "default_set"))
    params = PlannerParams.from_table(index)
    if overrides:
        params = replace(params, **{k: float(v) for k, v in overrides.items()})
    return params


def make_planner(kind: str, params: PlannerParams, x0: np.ndarray):
    """构造规划器：harmonic 或 bangbang（bang-bang 使用 a_cap 与 v_d 作为加速度/速度上限）"""
    if kind == "harmonic":
        return HarmonicPlanner(params, x0)
    if kind == "bangbang":
        return BangBangPlanner(params.a_cap, params.v_d, x0)
    raise ValueError(f"未知规划器: {kind}，可选 {PLANNERS}")


def reference_velocities(stream: TrajectoryStream) -> np.ndarray:
    """参考轨迹速度向量（有限差分）"""
    if len(stream) < 2:
        return np.zeros((len(stream), 3))
    return np.gradient(stream.positions, stream.times, axis=0)


def track_stream(stream: TrajectoryStream, planner_kind: str, params: PlannerParams,
                 planning_rate: Optional[float] = None) -> Dict[str, np.ndarray]:
    """
    纯运动学跟踪：规划器按规划频率消费via点

    Args:
        stream: 轨迹流
        planner_kind: harmonic | bangbang
        params: 规划器参数
        planning_rate: 规划频率 (Hz)

    Returns:
        含 t, reference, reference_velocity, position, velocity 的字典
    """
    if planning_rate is None:
        planning_rate = float(get_config().get("simulation", "planning_rate"))
    if len(stream) == 0:
        empty = np.zeros((0, 3))
        return {"t": np.zeros(0), "reference": empty, "reference_velocity": empty,
                "position": empty, "velocity": empty}

    period = 1.0 / planning_rate
    n_ticks = int(np.floor(stream.duration * planning_rate + 1e-9)) + 1
    t = np.arange(n_ticks) * period
    ref_vel = reference_velocities(stream)
    relative = stream.times - stream.times[0]

    planner = make_planner(planner_kind, params, stream.positions[0])
    reference = np.zeros((n_ticks, 3))
    reference_velocity = np.zeros((n_ticks, 3))
    position = np.zeros((n_ticks, 3))
    velocity = np.zeros((n_ticks, 3))
    last_target = None
    for k, t_k in enumerate(t):
        target, v_d = stream_targets(stream, t_k)
        index = min(int(np.searchsorted(relative, t_k, side="right") - 1), len(stream) - 1)
        if last_target is None or np.any(target != last_target):
            planner.set_target(target, v_d)
            last_target = target
        position[k], velocity[k] = planner.advance(period)
        reference[k] = target
        reference_velocity[k] = ref_vel[index]
    return {"t": t, "reference": reference, "reference_velocity": reference_velocity,
            "position": position, "velocity": velocity}


def run_planner_comparison(stream: TrajectoryStream, params_index: int,
                           overrides: Optional[Dict[str, float]] = None) -> Dict[str, Dict[str, float]]:
    """
    在同一轨迹上比较谐波规划器与bang-bang规划器

    Args:
        stream: 轨迹流
        params_index: 参数组编号 (1-6)
        overrides: 参数覆盖

    Returns:
        {"harmonic": 行, "bangbang": 行}，行字段为 N, RMSE(y), RMSE(z), RMSE(ẏ), RMSE(ż)
    """
    params = planner_params(params_index, overrides)
    rows = {}
    for kind in PLANNERS:
        tracked = track_stream(stream, kind, params)
        pos_err = rmse(tracked["position"][:, 1:3], tracked["reference"][:, 1:3])
        vel_err = rmse(tracked["velocity"][:, 1:3], tracked["reference_velocity"][:, 1:3])
        rows[kind] = dict(zip(COMPARISON_COLUMNS,
                              [params_index, float(pos_err[0]), float(pos_err[1]),
                               float(vel_err[0]), float(vel_err[1])]))
    logger.info(f"参数组 {params_index}: 谐波 RMSE(y,z)=({rows['harmonic']['RMSE(y)']:.4f}, "
                f"{rows['harmonic']['RMSE(z)']:.4f}), bang-bang RMSE(y,z)=("
                f"{rows['bangbang']['RMSE(y)']:.4f}, {rows['bangbang']['RMSE(z)']:.4f})")
    return rows


def simlog_columns(dof: int) -> List[str]:
    """
    仿真日志列（固定顺序）

    plan_r*, ee_r* 为期望位姿 X_d 与实际末端姿态的旋转向量 (rad)；xd_* 为 FK(q_d) 的位置
    """
    columns = ["t", "ref_x", "ref_y", "ref_z", "plan_x", "plan_y", "plan_z",
               "plan_vx", "plan_vy", "plan_vz", "plan_rx", "plan_ry", "plan_rz",
               "xd_x", "xd_y", "xd_z", "ee_x", "ee_y", "ee_z", "ee_rx", "ee_ry", "ee_rz"]
    for prefix in ("q_d", "q", "qd", "tau"):
        columns += [f"{prefix}_{i}" for i in range(dof)]
    columns += ["fext_x", "fext_y", "fext_z", "text_x", "text_y", "text_z",
                "fic_fx", "fic_fy", "fic_fz", "fic_tx", "fic_ty", "fic_tz", "fic_force_norm", "fic_torque_norm"]
    return columns


def _board_offset(perturbations: List[Perturbation], t: float) -> np.ndarray:
    offset = np.zeros(3)
    for p in perturbations:
        if p.kind == "board_shift" and p.start <= t < p.end:
            offset = offset + np.asarray(p.offset)
    return offset


def run_closed_loop(config: ExperimentConfig, model: Optional[RobotModel] = None,
                    stream: Optional[TrajectoryStream] = None) -> pd.DataFrame:
    """
    执行闭环仿真：规划器与QP-IK按规划频率运行，力矩指令与被控对象按1 kHz运行（零阶保持）

    轨迹以机器人初始姿态的末端位姿为锚点：流中的位置视为相对第一个采样的偏移。

    Args:
        config: 实验配置
        model: 机器人模型（None时按配置加载）
        stream: 轨迹流（None时按配置构造），随后按 S_x, S_t 缩放

    Returns:
        仿真日志 (SimLog)
    """
    start_time = time.time()
    sim_cfg = get_config().get("simulation")
    dt = float(sim_cfg["control_dt"])
    planning_rate = float(sim_cfg["planning_rate"])
    plan_every = max(1, int(round(1.0 / (planning_rate * dt))))
    plan_period = plan_every * dt

    if model is None:
        model = load_model(config.model, config.base_dir)
    if stream is None:
        stream = build_stream(config.trajectory, config.base_dir)
    if len(stream) == 0:
        raise ValueError("轨迹流为空，无法执行闭环仿真")
    stream = scale(stream, config.S_x, config.S_t)

    duration = config.duration if config.duration is not None else stream.duration + config.settle
    n_ticks = int(round(duration / dt))
    logger.info(f"开始闭环仿真 {config.name}: 模型 {model.name}, 规划器 {config.planner}, "
                f"FIC {config.fic_preset}, 时长 {duration:.2f}s ({n_ticks} 步)")

    home_pose = forward_kinematics(model, model.home)
    anchor = home_pose.translation - stream.positions[0]
    R0_inv = stream_orientation(stream, 0.0).T

    params = planner_params(config.planner_set, config.planner_overrides)
    planner = make_planner(config.planner, params, home_pose.translation)
    ik = QpIkSolver(model, IkWeights.from_config(model.dof, plan_period, **config.ik), q0=model.home)

    fic_linear = replace(FicParams.from_preset(config.fic_preset), **config.fic_overrides)
    fic_angular = replace(FicParams.from_preset("angular"), **config.fic_angular_overrides)
    controller = FicController(model, fic_linear, fic_angular,
                               ControllerGains.from_config(model, config.nldc_enabled))

    wrench_schedule = ExternalWrench([(p.start, p.end, Wrench(force=p.force, torque=p.torque))
                                      for p in config.perturbations if p.kind == "wrench"])

    state = DynState(q=model.home.copy(), qd=np.zeros(model.dof), t=0.0)
    X_d = home_pose
    plan_rot = so3_log(home_pose.rotation)
    q_d = ik.q_d
    xd_achieved = home_pose.translation
    reference = home_pose.translation
    plan_pos, plan_vel = home_pose.translation, np.zeros(3)
    last_target = None
    tau_max = model.tau_max
    condition_limit = float(sim_cfg["condition_limit"])

    rows = np.zeros((n_ticks, len(simlog_columns(model.dof))))
    for k in range(n_ticks):
        t = k * dt
        if k % plan_every == 0:
            offset, v_d = stream_targets(stream, t)
            target = anchor + offset + _board_offset(config.perturbations, t)
            if last_target is None or np.any(target != last_target):
                planner.set_target(target, v_d)
                last_target = target
            reference = target
            plan_pos, plan_vel = planner.advance(plan_period)
            rotation = stream_orientation(stream, t) @ R0_inv @ home_pose.rotation
            X_d = Pose(rotation=rotation, translation=plan_pos)
            plan_rot = so3_log(rotation)
            q_d = ik.step(X_d)
            xd_achieved = forward_kinematics(model, q_d).translation

        external = wrench_schedule.at(t)
        tau = np.clip(controller.command(state.q, state.qd, q_d, X_d), -tau_max, tau_max)
        ee = forward_kinematics(model, state.q)
        fic = controller.last_wrench
        rows[k] = np.concatenate([
            [t], reference, plan_pos, plan_vel, plan_rot, xd_achieved, ee.translation, so3_log(ee.rotation),
            q_d, state.q, state.qd, tau, external.force, external.torque,
            fic, [np.linalg.norm(fic[:3]), np.linalg.norm(fic[3:])],
        ])

        try:
            state = step_forward_dynamics(model, state, tau, external, dt, condition_limit)
        except SimulationFault as e:
            logger.error(f"仿真在 t={t:.3f}s 中止: {e}", exc_info=True)
            raise

    log = pd.DataFrame(rows, columns=simlog_columns(model.dof))
    elapsed = time.time() - start_time
    logger.info(f"闭环仿真完成，耗时: {elapsed:.2f}秒")
    return log


def save_simlog(log: pd.DataFrame, path: str) -> str:
    """保存仿真日志CSV"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    log.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"仿真日志已保存: {path}")
    return path


def load_simlog(path: str) -> pd.DataFrame:
    """读取仿真日志CSV并校验列顺序"""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"仿真日志不存在: {path}")
    log = pd.read_csv(path)
    dof = sum(1 for c in log.columns if c.startswith("tau_"))
    if list(log.columns) != simlog_columns(dof):
        raise ValueError(f"仿真日志列顺序不符: {path}")
    return log
