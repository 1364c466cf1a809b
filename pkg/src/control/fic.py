"""
File: src/control/fic.py
分形阻抗控制器 (FIC)
逐轴非线性刚度力律与发散/收敛两相吸引子：误差增大时按饱和力律储能，
误差减小时沿经过中点的线性弹簧释放
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

# 本地模块导入
from ..config import get_config
from ..planning.harmonic_planner import Phase, detect_phase

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("fic")


@dataclass(frozen=True)
class FicParams:
    """单轴FIC参数：基础刚度、饱和边界、最大力、饱和起始系数"""
    K0: float        # N/m 或 N·m/rad
    x_b: float       # m 或 rad
    F_max: float     # N 或 N·m
    xi: float = 0.9

    def __post_init__(self):
        if not self.K0 > 0.0:
            raise ValueError(f"K0 必须为正: {self.K0}")
        if not self.x_b > 0.0:
            raise ValueError(f"x_b 必须为正: {self.x_b}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi 必须位于 [0, 1]: {self.xi}")
        if not self.F_max > self.F0:
            raise ValueError(f"F_max={self.F_max} 必须大于 xi·K0·x_b={self.F0}")

    @property
    def F0(self) -> float:
        return self.xi * self.K0 * self.x_b

    @property
    def delta_F(self) -> float:
        return self.F_max - self.F0

    @property
    def S(self) -> float:
        """tanh 过渡宽度 (与 x_b 同单位)"""
        return (1.0 - self.xi) * self.x_b / (2.0 * math.pi)

    @classmethod
    def from_preset(cls, name: str) -> "FicParams":
        """
        按名称加载预设：set1 / set2（线性轴）或 angular（角度轴）

        Args:
            name: 预设名称

        Returns:
            FIC参数
        """
        fic = get_config().get("fic")
        if name == "angular":
            preset = fic["angular"]
        elif name in fic["presets"]:
            preset = fic["presets"][name]
        else:
            raise ValueError(f"未知FIC预设: {name}，可选 {sorted(fic['presets'])} 或 angular")
        return cls(K0=float(preset["K0"]), x_b=float(preset["x_b"]),
                   F_max=float(preset["F_max"]), xi=float(preset.get("xi", fic["xi"])))


@dataclass(frozen=True)
class FicAxisState:
    """单轴吸引子状态"""
    phase: Phase = Phase.DIVERGENCE
    x_tilde_max: float = 0.0     # 收敛相开始时锁存的带符号最大误差
    prev_err: float = 0.0
    peak: float = 0.0            # 当前发散相的带符号峰值误差


def fic_force(params: FicParams, x_tilde: float) -> float:
    """
    FIC饱和力律（奇函数）

    |x̃| ≤ ξx_b 时为线性弹簧 K0·x̃；否则为
    sign(x̃)·[ΔF/2·(tanh((|x̃| − x_b)/S + π) + 1) + F0]

    Args:
        params: FIC参数
        x_tilde: 误差

    Returns:
        恢复力
    """
    magnitude = abs(x_tilde)
    if magnitude <= params.xi * params.x_b:
        return params.K0 * x_tilde
    S = params.S
    if S <= 0.0:
        saturated = params.F_max
    else:
        saturated = (0.5 * params.delta_F * (math.tanh((magnitude - params.x_b) / S + math.pi) + 1.0)
                     + params.F0)
    return math.copysign(saturated, x_tilde)


def convergence_force(params: FicParams, x_tilde_max: float, x_tilde: float) -> float:
    """收敛相线性弹簧，经过 (x̃_max, F_c(x̃_max)) 与 (x̃_max/2, 0)"""
    return (2.0 * fic_force(params, x_tilde_max) / x_tilde_max) * (x_tilde - 0.5 * x_tilde_max)


def fic_attractor(params: FicParams, state: FicAxisState,
                  x_tilde: float) -> Tuple[float, FicAxisState]:
    """
    两相吸引子

    Args:
        params: FIC参数
        state: 当前轴状态
        x_tilde: 当前误差

    Returns:
        (力, 新状态)
    """
    phase = detect_phase(state.prev_err, x_tilde)
    x_max, peak = state.x_tilde_max, state.peak

    if phase is Phase.CONVERGENCE and state.phase is Phase.DIVERGENCE:
        x_max = peak if abs(peak) >= abs(state.prev_err) else state.prev_err
    if phase is Phase.CONVERGENCE and x_max == 0.0:
        phase = Phase.DIVERGENCE

    if phase is Phase.DIVERGENCE:
        if state.phase is Phase.CONVERGENCE or abs(x_tilde) > abs(peak):
            peak = x_tilde
        force = fic_force(params, x_tilde)
    else:
        force = convergence_force(params, x_max, x_tilde)

    return force, replace(state, phase=phase, x_tilde_max=x_max, prev_err=x_tilde, peak=peak)


def fic_wrench(linear: FicParams, angular: FicParams, states: Tuple[FicAxisState, ...],
               error: np.ndarray) -> Tuple[np.ndarray, Tuple[FicAxisState, ...]]:
    """
    六轴FIC力旋量：前三轴用线性参数（平移误差），后三轴用角度参数（旋转向量误差）

    Args:
        linear: 线性轴参数
        angular: 角度轴参数
        states: 六个轴的状态
        error: 6维位姿误差（线速度分量在前）

    Returns:
        (6维力旋量 [力; 力矩], 新状态)
    """
    if len(states) != 6:
        raise ValueError(f"FIC需要6个轴状态，实际 {len(states)}")
    wrench = np.zeros(6)
    new_states = []
    for i in range(6):
        params = linear if i < 3 else angular
        wrench[i], s = fic_attractor(params, states[i], float(error[i]))
        new_states.append(s)
    return wrench, tuple(new_states)


def initial_states() -> Tuple[FicAxisState, ...]:
    """六轴初始状态"""
    return tuple(FicAxisState() for _ in range(6))
