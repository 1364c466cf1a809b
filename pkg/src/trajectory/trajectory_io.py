"""
File: src/trajectory/trajectory_io.py
轨迹读写与流式播放
加载动作捕捉CSV轨迹，按（缩放后的）采样频率以零阶保持输出via点和切向速度，并提供空间/时间缩放
"""

import io
import os
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("trajectory_io")

POSITION_COLUMNS = ["t", "x", "y", "z"]
ORIENTATION_COLUMNS = ["qw", "qx", "qy", "qz"]


class TrajectoryParseError(ValueError):
    """CSV解析错误，line 为文件中的行号（从1开始）"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"第 {line} 行: {message}" if line is not None else message)
        self.line = line


class TrajectoryValidationError(ValueError):
    """轨迹内容校验错误（如时间非单调），line 为文件中的行号"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"第 {line} 行: {message}" if line is not None else message)
        self.line = line


def tangential_speeds(times: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """
    有限差分切向速度：内部点中心差分，端点前向/后向差分

    Args:
        times: N个采样时刻 (s)
        positions: N×3 位置 (m)

    Returns:
        N个切向速度 (m/s)
    """
    n = len(times)
    speeds = np.zeros(n)
    if n < 2:
        return speeds
    speeds[0] = np.linalg.norm(positions[1] - positions[0]) / (times[1] - times[0])
    speeds[-1] = np.linalg.norm(positions[-1] - positions[-2]) / (times[-1] - times[-2])
    if n > 2:
        span = times[2:] - times[:-2]
        speeds[1:-1] = np.linalg.norm(positions[2:] - positions[:-2], axis=1) / span
    return speeds


@dataclass(frozen=True)
class TrajectoryStream:
    """有序via点流"""
    times: np.ndarray                  # N (s)，严格递增，已按 S_t 缩放
    positions: np.ndarray              # N×3 (m)
    orientations: np.ndarray           # N×4 单位四元数 (w, x, y, z)
    rate: float = 100.0                # Hz
    S_x: float = 1.0
    S_t: float = 1.0
    speeds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        orientations = np.asarray(self.orientations, dtype=float).reshape(-1, 4)
        if not (len(times) == len(positions) == len(orientations)):
            raise TrajectoryValidationError(
                f"采样数不一致: t={len(times)}, 位置={len(positions)}, 姿态={len(orientations)}")
        if len(times) > 1 and np.any(np.diff(times) <= 0.0):
            raise TrajectoryValidationError("时间戳必须严格递增")
        for name in ("rate", "S_x", "S_t"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} 必须为正: {getattr(self, name)}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "orientations", orientations)
        object.__setattr__(self, "speeds", tangential_speeds(times, positions))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self) else 0.0

    @property
    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0) if len(self) else np.zeros(3)

    @classmethod
    def from_positions(cls, positions: np.ndarray, rate: float = 100.0) -> "TrajectoryStream":
        """由等间隔位置序列构造（姿态取单位四元数）"""
        positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        n = len(positions)
        orientations = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        return cls(times=np.arange(n) / rate, positions=positions, orientations=orientations, rate=rate)


def _strip_comments(text: str) -> Tuple[List[str], List[int]]:
    """去除注释与空行，返回保留行及其原始行号"""
    kept, numbers = [], []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            kept.append(line)
            numbers.append(number)
    return kept, numbers


def load_csv(path: str) -> TrajectoryStream:
    """
    加载CSV轨迹：列为 t,x,y,z[,qw,qx,qy,qz]，'#' 开头为注释

    Args:
        path: CSV文件路径

    Returns:
        轨迹流（缺省姿态为单位四元数）
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"轨迹文件不存在: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines, numbers = _strip_comments(f.read())
    if not lines:
        raise TrajectoryParseError("缺少表头", line=1)

    header = [c.strip() for c in lines[0].split(",")]
    if header not in (POSITION_COLUMNS, POSITION_COLUMNS + ORIENTATION_COLUMNS):
        raise TrajectoryParseError(
            f"表头应为 {','.join(POSITION_COLUMNS)}[,{','.join(ORIENTATION_COLUMNS)}]，实际为 {lines[0]}",
            line=numbers[0])

    # 逐行检查字段数
    for row_index, raw in enumerate(lines[1:]):
        if len(raw.split(",")) != len(header):
            raise TrajectoryParseError(f"应有 {len(header)} 个字段: {raw}", line=numbers[row_index + 1])

    try:
        df = pd.read_csv(io.StringIO("\n".join(lines)), dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise TrajectoryParseError(f"CSV格式错误: {e}") from e
    values = df.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().any(axis=1) | ~np.isfinite(values.to_numpy(dtype=float)).all(axis=1)
    if bad.any():
        row_index = int(np.argmax(bad.to_numpy()))
        raise TrajectoryParseError(f"无法解析为有限数值: {lines[row_index + 1]}", line=numbers[row_index + 1])

    data = values.to_numpy(dtype=float)
    times = data[:, 0]
    steps = np.diff(times)
    if np.any(steps <= 0.0):
        row_index = int(np.argmax(steps <= 0.0)) + 1
        raise TrajectoryValidationError(f"时间戳非严格递增: t={times[row_index]}", line=numbers[row_index + 1])

    if len(header) == 8:
        quats = data[:, 4:8]
        norms = np.linalg.norm(quats, axis=1)
        if np.any(norms < 1e-9):
            row_index = int(np.argmax(norms < 1e-9))
            raise TrajectoryValidationError("四元数范数为零", line=numbers[row_index + 1])
        quats = quats / norms[:, None]
    else:
        quats = np.tile([1.0, 0.0, 0.0, 0.0], (len(times), 1))

    rate = 1.0 / float(np.median(steps)) if len(steps) else 100.0
    stream = TrajectoryStream(times=times, positions=data[:, 1:4], orientations=quats, rate=rate)
    logger.info(f"加载轨迹 {path}: {len(stream)} 个采样, 频率 {rate:.1f}Hz, 时长 {stream.duration:.2f}s")
    return stream


def save_csv(stream: TrajectoryStream, path: str) -> str:
    """
    保存轨迹为CSV（含姿态列）

    Args:
        stream: 轨迹流
        path: 输出路径

    Returns:
        输出路径
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df = pd.DataFrame(np.column_stack([stream.times, stream.positions, stream.orientations]),
                      columns=POSITION_COLUMNS + ORIENTATION_COLUMNS)
    df.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"轨迹已保存: {path}")
    return path


def scale(stream: TrajectoryStream, S_x: float, S_t: float) -> TrajectoryStream:
    """
    空间/时间缩放：位置绕质心乘以 S_x，播放频率乘以 S_t（S_t < 1 变慢）

    Args:
        stream: 轨迹流
        S_x: 空间缩放系数
        S_t: 时间缩放系数

    Returns:
        缩放后的轨迹流
    """
    if not (S_x > 0.0 and S_t > 0.0):
        raise ValueError(f"缩放系数必须为正: S_x={S_x}, S_t={S_t}")
    if len(stream) == 0:
        return TrajectoryStream(times=stream.times, positions=stream.positions,
                                orientations=stream.orientations, rate=stream.rate * S_t,
                                S_x=stream.S_x * S_x, S_t=stream.S_t * S_t)
    c = stream.centroid
    positions = c + S_x * (stream.positions - c)
    t0 = stream.times[0]
    times = t0 + (stream.times - t0) / S_t
    return TrajectoryStream(times=times, positions=positions, orientations=stream.orientations,
                            rate=stream.rate * S_t, S_x=stream.S_x * S_x, S_t=stream.S_t * S_t)


def sample_index(stream: TrajectoryStream, t_now: float) -> int:
    """零阶保持：t_now（相对流起点）对应的采样索引，超出末尾返回 -1"""
    if t_now < 0.0:
        raise ValueError(f"t_now 不能为负: {t_now}")
    relative = stream.times - stream.times[0]
    if t_now > relative[-1]:
        return -1
    return int(np.searchsorted(relative, t_now, side="right") - 1)


def stream_targets(stream: TrajectoryStream, t_now: float) -> Tuple[np.ndarray, float]:
    """
    当前via点与切向速度

    Args:
        stream: 轨迹流
        t_now: 相对流起点的时间 (s)

    Returns:
        (目标点, 切向速度)；超出末尾时返回最后一点与速度0
    """
    if len(stream) == 0:
        raise ValueError("空轨迹流无法输出目标")
    k = sample_index(stream, t_now)
    if k < 0:
        return stream.positions[-1].copy(), 0.0
    return stream.positions[k].copy(), float(stream.speeds[k])


def stream_orientation(stream: TrajectoryStream, t_now: float) -> np.ndarray:
    """当前via点的旋转矩阵"""
    k = sample_index(stream, t_now)
    w, x, y, z = stream.orientations[k]
    return Rotation.from_quat([x, y, z, w]).as_matrix()
