"""
File: src/trajectory/synth.py
合成轨迹生成器
在 y-z 平面（白板平面）内生成圆、八字、手写笔迹、字母笔画与定点保持轨迹，采样频率100Hz
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

# 本地模块导入
from ..config import get_config
from .trajectory_io import TrajectoryStream

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("synth")

SYNTH_KINDS = ("circle", "figure8", "script", "letter", "hold")

# 字母笔画折线（单位高度，y为宽度方向，z为高度方向）；"arc" 段为 (圆心y, 圆心z, 半径, 起始角, 终止角)
_LETTER_STROKES = {
    "H": [("line", [(0.0, 0.0), (0.0, 1.0), (0.0, 0.5), (0.6, 0.5), (0.6, 1.0), (0.6, 0.0)])],
    "F": [("line", [(0.0, 0.0), (0.0, 1.0), (0.6, 1.0), (0.0, 1.0), (0.0, 0.5), (0.45, 0.5)])],
    "B": [
        ("line", [(0.0, 0.0), (0.0, 1.0), (0.3, 1.0)]),
        ("arc", (0.3, 0.75, 0.25, 0.5 * np.pi, -0.5 * np.pi)),
        ("line", [(0.3, 0.5), (0.0, 0.5), (0.35, 0.5)]),
        ("arc", (0.35, 0.25, 0.25, 0.5 * np.pi, -0.5 * np.pi)),
        ("line", [(0.35, 0.0), (0.0, 0.0)]),
    ],
}


def _plane_points(y: np.ndarray, z: np.ndarray, x: float = 0.0) -> np.ndarray:
    return np.column_stack([np.full_like(y, x), y, z])


def _circle(params: Dict[str, Any], rate: float) -> np.ndarray:
    radius = float(params.get("radius", 0.1))
    duration = float(params.get("duration", 2.0))
    revolutions = float(params.get("revolutions", 1.0))
    cy, cz = params.get("center", (0.0, 0.0))
    n = int(round(duration * rate))
    theta = 2.0 * np.pi * revolutions * np.arange(n) / n
    return _plane_points(cy + radius * np.cos(theta), cz + radius * np.sin(theta))


def _figure8(params: Dict[str, Any], rate: float) -> np.ndarray:
    A = float(params.get("A", 0.1))
    B = float(params.get("B", 0.1))
    duration = float(params.get("duration", 4.0))
    n = int(round(duration * rate))
    theta = 2.0 * np.pi * np.arange(n) / n
    return _plane_points(A * np.sin(theta), B * np.sin(2.0 * theta))


def _script(params: Dict[str, Any], rate: float) -> np.ndarray:
    """带限正弦叠加，模拟手写速度谱；相同种子逐位复现"""
    seed = int(params.get("seed", 0))
    duration = float(params.get("duration", 6.0))
    amplitude = float(params.get("amplitude", 0.01))
    components = int(params.get("components", 4))
    f_min, f_max = params.get("band", (0.3, 1.0))
    advance = float(params.get("advance_speed", 0.01))

    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * rate))) / rate
    y = advance * t
    z = np.zeros_like(t)
    for k in range(components):
        freq_y, freq_z = rng.uniform(f_min, f_max, size=2)
        phase_y, phase_z = rng.uniform(0.0, 2.0 * np.pi, size=2)
        weight = amplitude / (k + 1)
        y += weight * np.sin(2.0 * np.pi * freq_y * t + phase_y)
        z += weight * np.sin(2.0 * np.pi * freq_z * t + phase_z)
    return _plane_points(y, z)


def _letter_path(letter: str, height: float) -> np.ndarray:
    """字母笔画的稠密折线"""
    if letter not in _LETTER_STROKES:
        raise ValueError(f"不支持的字母: {letter}，可选 {sorted(_LETTER_STROKES)}")
    points = []
    for kind, data in _LETTER_STROKES[letter]:
        if kind == "line":
            points.extend(data)
        else:
            cy, cz, r, start, stop = data
            angles = np.linspace(start, stop, 64)
            points.extend(zip(cy + r * np.cos(angles), cz + r * np.sin(angles)))
    return height * np.asarray(points, dtype=float)


def resample_constant_speed(path: np.ndarray, speed: float, rate: float) -> np.ndarray:
    """
    按弧长以恒定速度重采样折线

    Args:
        path: M×d 折线顶点
        speed: 切向速度 (m/s)
        rate: 采样频率 (Hz)

    Returns:
        N×d 采样点
    """
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-12])
    path = path[keep]
    arc = np.concatenate([[0.0], np.cumsum(seg[seg > 1e-12])])
    n = int(np.floor(arc[-1] / speed * rate)) + 1
    s = np.minimum(np.arange(n) * speed / rate, arc[-1])
    if s[-1] < arc[-1]:
        s = np.append(s, arc[-1])
    return np.column_stack([np.interp(s, arc, path[:, j]) for j in range(path.shape[1])])


def _letter(params: Dict[str, Any], rate: float) -> np.ndarray:
    letter = str(params.get("letter", "H")).upper()
    height = float(params.get("height", 0.1))
    speed = float(params.get("speed", 0.05))
    yz = resample_constant_speed(_letter_path(letter, height), speed, rate)
    return _plane_points(yz[:, 0], yz[:, 1])


def _hold(params: Dict[str, Any], rate: float) -> np.ndarray:
    duration = float(params.get("duration", 5.0))
    point = np.asarray(params.get("point", (0.0, 0.0, 0.0)), dtype=float).reshape(3)
    return np.tile(point, (int(round(duration * rate)), 1))


_GENERATORS = {
    "circle": _circle,
    "figure8": _figure8,
    "script": _script,
    "letter": _letter,
    "hold": _hold,
}


def synth_trajectory(kind: str, params: Optional[Dict[str, Any]] = None) -> TrajectoryStream:
    """
    生成合成轨迹

    Args:
        kind: circle | figure8 | script | letter | hold
        params: 生成参数（半径、时长、种子、rate 等），缺省取默认值；rate 缺省为 simulation.stream_rate

    Returns:
        轨迹流
    """
    if kind not in _GENERATORS:
        raise ValueError(f"未知合成轨迹类型: {kind}，可选 {', '.join(SYNTH_KINDS)}")
    params = dict(params or {})
    rate = float(params.pop("rate", get_config().get("simulation", "stream_rate")))
    positions = _GENERATORS[kind](params, rate)
    stream = TrajectoryStream.from_positions(positions, rate=rate)
    logger.info(f"生成合成轨迹 {kind}: {len(stream)} 个采样")
    return stream


def parse_synth_spec(spec: str) -> TrajectoryStream:
    """
    解析命令行合成轨迹描述，如 "synth:circle,radius=0.1,duration=2"

    Args:
        spec: 以 "synth:" 开头的描述串

    Returns:
        轨迹流
    """
    body = spec[len("synth:"):] if spec.startswith("synth:") else spec
    parts = [p.strip() for p in body.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"合成轨迹描述为空: {spec}")
    kind, params = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise ValueError(f"合成轨迹参数应为 key=value: {item}")
        key, value = item.split("=", 1)
        try:
            params[key.strip()] = float(value)
        except ValueError:
            params[key.strip()] = value.strip()
    if "seed" in params:
        params["seed"] = int(params["seed"])
    return synth_trajectory(kind, params)
