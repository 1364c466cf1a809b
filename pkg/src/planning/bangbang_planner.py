"""
File: src/planning/bangbang_planner.py
最小速度bang-bang规划器（对比基线）
以最大加速度朝目标加速、以速度上限巡航、按制动曲线减速并在目标处静止
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

# 本地模块导入
from ..config import get_config

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("bangbang_planner")

# 到达判定距离 (m)
ARRIVAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BangBangState:
    """bang-bang规划器状态：位置与速度向量"""
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))


def braking_speed(distance: float, a_cap: float, dt: float) -> float:
    """
    离散制动速度：以每步 a_cap·dt 递减速度恰好在 distance 内停止的最大速度

    Args:
        distance: 剩余距离 (m)
        a_cap: 加速度上限 (m/s²)
        dt: 步长 (s)

    Returns:
        允许速度 (m/s)
    """
    if distance <= 0.0:
        return 0.0
    dv = a_cap * dt
    steps = math.sqrt(0.25 + 2.0 * distance / (a_cap * dt * dt)) - 0.5
    return dv * steps


def step_bangbang(state: BangBangState, x_t: np.ndarray, a_cap: float, v_cap: float,
                  dt: float) -> BangBangState:
    """
    bang-bang规划器单步

    期望速度 u·min(v_cap, 制动速度, s/dt)，速度变化量 ‖Δv‖ ≤ a_cap·dt。

    Args:
        state: 当前状态
        x_t: 目标点 (m)
        a_cap: 加速度上限 (m/s²)
        v_cap: 速度上限 (m/s)
        dt: 步长 (s)

    Returns:
        新状态
    """
    if not (a_cap > 0.0 and v_cap > 0.0 and dt > 0.0):
        raise ValueError(f"bang-bang参数必须为正: a_cap={a_cap}, v_cap={v_cap}, dt={dt}")
    x_t = np.asarray(x_t, dtype=float).reshape(3)

    offset = x_t - state.x
    distance = float(np.linalg.norm(offset))
    if distance > ARRIVAL_TOLERANCE:
        speed = min(v_cap, braking_speed(distance, a_cap, dt), distance / dt)
        v_des = offset / distance * speed
    else:
        v_des = np.zeros(3)

    dv = v_des - state.v
    dv_norm = float(np.linalg.norm(dv))
    dv_limit = a_cap * dt
    if dv_norm > dv_limit:
        dv *= dv_limit / dv_norm
    v_new = state.v + dv
    x_new = state.x + v_new * dt

    if np.linalg.norm(x_t - x_new) < ARRIVAL_TOLERANCE and np.linalg.norm(v_new) <= dv_limit:
        return BangBangState(x=x_t.copy(), v=np.zeros(3))
    return BangBangState(x=x_new, v=v_new)


class BangBangPlanner:
    """按via点流运行的bang-bang规划器，接口与谐波规划器一致"""

    def __init__(self, a_cap: float, v_cap: float, x0: np.ndarray, substep: float = None):
        self.config = get_config()
        self.a_cap = float(a_cap)
        self.v_cap = float(v_cap)
        self.substep = float(substep or self.config.get("planner", "substep"))
        self.state = BangBangState(x=x0, v=np.zeros(3))
        self.target = self.state.x.copy()

        logger.debug(f"bang-bang规划器初始化: a_cap={a_cap}, v_cap={v_cap}")

    @property
    def position(self) -> np.ndarray:
        return self.state.x

    @property
    def velocity(self) -> np.ndarray:
        return self.state.v

    def set_target(self, x_t: np.ndarray, v_d: float = None) -> bool:
        """设置新目标（bang-bang规划器不使用流式切向速度）"""
        self.target = np.asarray(x_t, dtype=float).reshape(3)
        return True

    def advance(self, period: float) -> Tuple[np.ndarray, np.ndarray]:
        """推进一个规划周期，返回 (位置, 速度)"""
        n_steps = max(1, int(math.ceil(period / self.substep - 1e-9)))
        h = period / n_steps
        for _ in range(n_steps):
            self.state = step_bangbang(self.state, self.target, self.a_cap, self.v_cap, h)
        return self.position, self.velocity
