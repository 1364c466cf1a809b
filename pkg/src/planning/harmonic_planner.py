"""
File: src/planning/harmonic_planner.py
谐波任务空间规划器
将via点流转换为平滑、限速的期望轨迹：单位惯量阻抗模型，发散/收敛两相吸引子，
由振动理论（阻尼比、固有频率）自动整定刚度与粘滞系数
"""

import math
import logging
from enum import Enum
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

# 本地模块导入
from ..config import get_config

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("harmonic_planner")

VELOCITY_CONSTANT = 1.595
MIN_TARGET_DISTANCE = 1e-9


class Phase(Enum):
    """吸引子相位"""
    DIVERGENCE = "Divergence"
    CONVERGENCE = "Convergence"


@dataclass(frozen=True)
class PlannerParams:
    """规划器参数：阻尼比、固有频率 (Hz)、加速度上限 (m/s²)、期望切向速度 (m/s)"""
    zeta: float
    f_n: float
    a_cap: float
    v_d: float

    def __post_init__(self):
        for name in ("zeta", "f_n", "a_cap", "v_d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"规划器参数 {name} 必须为正: {value}")

    @property
    def omega_n(self) -> float:
        return 2.0 * math.pi * self.f_n

    @classmethod
    def from_table(cls, index: int) -> "PlannerParams":
        """
        按编号 (1-6) 加载参数组

        Args:
            index: 参数组编号

        Returns:
            规划器参数
        """
        sets = get_config().get("planner", "parameter_sets")
        key = str(index)
        if key not in sets:
            raise ValueError(f"规划器参数组编号无效: {index}，可选 {sorted(sets)}")
        zeta, f_n, a_cap, v_d = sets[key]
        return cls(zeta=float(zeta), f_n=float(f_n), a_cap=float(a_cap), v_d=float(v_d))


@dataclass(frozen=True)
class DerivedGains:
    """由振动理论导出的规划器增益"""
    K: float                 # 1/s²
    mu: float                # 1/s
    v_max: float             # m/s
    a_max_vec: np.ndarray    # 各轴加速度上限 (m/s²)，带方向


@dataclass(frozen=True)
class PlannerAxisState:
    """单轴规划器状态"""
    x: float = 0.0
    v: float = 0.0
    a: float = 0.0
    phase: Phase = Phase.DIVERGENCE
    x_T0: float = 0.0        # 上一发散相的最大位移（带符号）
    A_max: float = 0.0       # 最大位移处的加速度（带符号）
    prev_err: float = 0.0
    peak: float = 0.0        # 当前发散相的带符号峰值误差
    via_err: float = 0.0     # 上一via点下达时的误差
    held: Optional[Phase] = None  # via点包络判定的相位，跟踪期间在一个via间隔内保持


def derive_gains(params: PlannerParams, d: np.ndarray, v_d: Optional[float] = None,
                 previous: Optional[DerivedGains] = None,
                 velocity_constant: float = VELOCITY_CONSTANT,
                 min_distance: float = MIN_TARGET_DISTANCE) -> DerivedGains:
    """
    由参数与新目标的距离向量导出增益

    K = ω_n²，μ = 2ζω_n，v_max = 1.595·min(v_d, ω_n‖d‖)，
    a_max_vec = 2(v_max/‖d‖)²·d，逐分量按 a_cap 限幅。

    Args:
        params: 规划器参数
        d: 发出新目标时从当前位置指向目标的距离向量 (m)
        v_d: 期望切向速度，None或非正时使用 params.v_d
        previous: 上一组增益，距离退化时沿用
        velocity_constant: 最大速度系数
        min_distance: 距离退化阈值 (m)

    Returns:
        导出增益
    """
    d = np.asarray(d, dtype=float).reshape(3)
    omega = params.omega_n
    K = omega ** 2
    mu = 2.0 * params.zeta * omega
    speed = params.v_d if (v_d is None or not v_d > 0.0) else float(v_d)

    distance = float(np.linalg.norm(d))
    if distance < min_distance:
        if previous is not None:
            return previous
        return DerivedGains(K=K, mu=mu, v_max=velocity_constant * speed, a_max_vec=np.zeros(3))

    v_max = velocity_constant * min(speed, omega * distance)
    a_vec = 2.0 * (v_max / distance) ** 2 * d
    a_vec = np.clip(a_vec, -params.a_cap, params.a_cap)
    return DerivedGains(K=K, mu=mu, v_max=v_max, a_max_vec=a_vec)


def detect_phase(prev_err: float, err: float) -> Phase:
    """误差幅值减小且未过零时为收敛相，否则为发散相"""
    if abs(err) < abs(prev_err) and np.sign(err) == np.sign(prev_err):
        return Phase.CONVERGENCE
    return Phase.DIVERGENCE


def divergence_acceleration(err: float, K: float, a_axis: float) -> float:
    """发散相弹簧加速度（不含粘滞项）"""
    return math.copysign(min(K * abs(err), a_axis), err) if err != 0.0 else 0.0


def convergence_acceleration(err: float, x_T0: float, A_max: float) -> float:
    """收敛相线性弹簧加速度（不含粘滞项），经过 (x_T0, A_max) 与 (x_T0/2, 0)"""
    return (2.0 * A_max / x_T0) * (err - 0.5 * x_T0)


def via_point_phase(state: PlannerAxisState, err: float, gains: DerivedGains,
                    a_axis: float) -> PlannerAxisState:
    """
    新via点下达时按误差包络判定相位

    跟踪连续via点时误差在每个间隔内呈锯齿状，逐子步检测会在每个间隔内重启两相；
    这里比较相邻两个via点下达时刻的误差，收敛相以本次误差为 x_T0 锚定。

    Args:
        state: 单轴状态
        err: 指向新目标的误差 (m)
        gains: 新目标的导出增益
        a_axis: 本轴加速度上限 (m/s²)

    Returns:
        更新了保持相位的状态
    """
    held = detect_phase(state.via_err, err)
    if held is Phase.CONVERGENCE:
        A_max = math.copysign(min(gains.K * abs(err), a_axis), err)
        return replace(state, held=held, via_err=err, phase=held, x_T0=err, A_max=A_max,
                       prev_err=err, peak=0.0)
    return replace(state, held=held, via_err=err, phase=held, prev_err=0.0, peak=0.0)


def _step_axis(state: PlannerAxisState, gains: DerivedGains, a_axis: float,
               x_t: float, hold: bool = False) -> PlannerAxisState:
    """单轴相位检测与加速度计算（不积分）"""
    err = x_t - state.x
    x_T0, A_max, peak = state.x_T0, state.A_max, state.peak

    if hold and state.held is not None:
        phase = state.held
        if phase is Phase.DIVERGENCE and abs(err) > abs(peak):
            peak = err
        spring = (divergence_acceleration(err, gains.K, a_axis) if phase is Phase.DIVERGENCE
                  else convergence_acceleration(err, x_T0, A_max))
        return replace(state, a=spring - gains.mu * state.v, phase=phase, prev_err=err, peak=peak)

    phase = detect_phase(state.prev_err, err)
    if phase is Phase.CONVERGENCE and state.phase is Phase.DIVERGENCE:
        x_T0 = peak if abs(peak) >= abs(state.prev_err) else state.prev_err
        A_max = math.copysign(min(gains.K * abs(x_T0), a_axis), x_T0)
    if phase is Phase.CONVERGENCE and x_T0 == 0.0:
        phase = Phase.DIVERGENCE

    if phase is Phase.DIVERGENCE:
        if state.phase is Phase.CONVERGENCE or abs(err) > abs(peak):
            peak = err
        spring = divergence_acceleration(err, gains.K, a_axis)
    else:
        spring = convergence_acceleration(err, x_T0, A_max)

    return replace(state, a=spring - gains.mu * state.v, phase=phase,
                   x_T0=x_T0, A_max=A_max, prev_err=err, peak=peak)


def step_harmonic(states: Tuple[PlannerAxisState, ...], gains: DerivedGains,
                  x_t: np.ndarray, dt: float, hold: bool = False) -> Tuple[PlannerAxisState, ...]:
    """
    谐波规划器单步积分（半隐式欧拉）

    各轴独立计算加速度，积分速度后按任务空间切向速度 v_max 统一限幅，再积分位置。

    Args:
        states: 三个轴的状态
        gains: 导出增益
        x_t: 当前目标点 (m)
        dt: 步长 (s)
        hold: 是否沿用via点下达时判定的相位

    Returns:
        新的三轴状态
    """
    if not dt > 0.0:
        raise ValueError(f"规划器步长必须为正: {dt}")
    x_t = np.asarray(x_t, dtype=float).reshape(3)

    updated = [_step_axis(s, gains, abs(float(gains.a_max_vec[i])), float(x_t[i]), hold)
               for i, s in enumerate(states)]

    velocity = np.array([s.v + s.a * dt for s in updated])
    speed = float(np.linalg.norm(velocity))
    if speed > gains.v_max:
        velocity *= gains.v_max / speed

    return tuple(replace(s, v=float(velocity[i]), x=s.x + float(velocity[i]) * dt)
                 for i, s in enumerate(updated))


class HarmonicPlanner:
    """谐波规划器：按流频率接收via点，以内部子步长积分"""

    def __init__(self, params: PlannerParams, x0: np.ndarray, substep: Optional[float] = None):
        """
        初始化规划器

        Args:
            params: 规划器参数
            x0: 初始位置 (m)
            substep: 内部积分步长 (s)，None时读取配置
        """
        self.config = get_config()
        self.params = params
        self.substep = float(substep or self.config.get("planner", "substep"))
        self.velocity_constant = float(self.config.get("planner", "velocity_constant"))
        self.min_distance = float(self.config.get("planner", "min_target_distance"))
        x0 = np.asarray(x0, dtype=float).reshape(3)
        self.states = tuple(PlannerAxisState(x=float(x)) for x in x0)
        self.target = x0.copy()
        self.gains = derive_gains(params, np.zeros(3), velocity_constant=self.velocity_constant,
                                  min_distance=self.min_distance)
        self.via_interval: Optional[float] = None
        self._since_target: Optional[float] = None

        logger.debug(f"谐波规划器初始化: zeta={params.zeta}, f_n={params.f_n}Hz, "
                     f"a_cap={params.a_cap}, v_d={params.v_d}, substep={self.substep}s")

    @property
    def position(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([s.v for s in self.states])

    def set_target(self, x_t: np.ndarray, v_d: Optional[float] = None) -> bool:
        """
        发出新目标：重新导出增益，按误差包络判定各轴相位

        连续两个目标的间隔记为via间隔，此后每个间隔内沿用下达时判定的相位。

        Args:
            x_t: 目标点 (m)
            v_d: 流式切向速度 (m/s)，为0时回退到参数默认值

        Returns:
            是否接受了新目标（距离退化时为False）
        """
        x_t = np.asarray(x_t, dtype=float).reshape(3)
        d = x_t - self.position
        if np.linalg.norm(d) < self.min_distance:
            return False

        self.gains = derive_gains(self.params, d, v_d, previous=self.gains,
                                  velocity_constant=self.velocity_constant,
                                  min_distance=self.min_distance)
        self.target = x_t
        self.states = tuple(via_point_phase(s, float(d[i]), self.gains, abs(float(self.gains.a_max_vec[i])))
                            for i, s in enumerate(self.states))
        if self._since_target is not None:
            self.via_interval = self._since_target
        self._since_target = 0.0
        return True

    def advance(self, period: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        推进一个规划周期

        Args:
            period: 规划周期 (s)

        Returns:
            (位置, 速度)
        """
        n_steps = max(1, int(math.ceil(period / self.substep - 1e-9)))
        h = period / n_steps
        for _ in range(n_steps):
            hold = (self.via_interval is not None and self._since_target is not None
                    and self._since_target < self.via_interval - 1e-12)
            self.states = step_harmonic(self.states, self.gains, self.target, h, hold)
            if self._since_target is not None:
                self._since_target += h
        return self.position, self.velocity
