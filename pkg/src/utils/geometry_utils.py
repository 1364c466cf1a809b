"""
File: src/utils/geometry_utils.py
几何计算工具
提供轨迹点集的归一化、形状相似度、均方根误差与包围盒尺寸等计算功能
"""

import logging
from typing import Dict, Sequence

import numpy as np
from scipy.spatial import procrustes

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("geometry_utils")


def normalize_shape(points: np.ndarray) -> np.ndarray:
    """
    去除质心与尺度后的点集（Frobenius范数归一）

    Args:
        points: N×d 点集

    Returns:
        归一化点集；退化（全部重合）时返回零矩阵
    """
    points = np.asarray(points, dtype=float)
    centered = points - points.mean(axis=0)
    norm = np.linalg.norm(centered)
    if norm < 1e-15:
        return np.zeros_like(centered)
    return centered / norm


def resample_polyline(points: np.ndarray, n: int) -> np.ndarray:
    """
    按弧长将折线重采样为 n 个点

    Args:
        points: M×d 折线
        n: 目标点数

    Returns:
        n×d 点集
    """
    points = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] < 1e-15:
        return np.repeat(points[:1], n, axis=0)
    s = np.linspace(0.0, arc[-1], n)
    return np.column_stack([np.interp(s, arc, points[:, j]) for j in range(points.shape[1])])


def shape_similarity(a: np.ndarray, b: np.ndarray, n: int = 200) -> float:
    """
    Procrustes形状相似度 1 − disparity（平移、缩放、旋转不变）

    两条路径先按弧长重采样到相同点数，再去除质心与尺度；任一路径退化时相似度为0。

    Args:
        a, b: 两条路径（N×d，通常为运动平面内的二维坐标）
        n: 重采样点数

    Returns:
        [0, 1] 区间的相似度，1 为完全相同
    """
    a = normalize_shape(resample_polyline(a, n))
    b = normalize_shape(resample_polyline(b, n))
    if not np.any(a) or not np.any(b):
        return 0.0
    _, _, disparity = procrustes(a, b)
    return float(1.0 - disparity)


def rmse(actual: np.ndarray, reference: np.ndarray, axis: int = 0) -> np.ndarray:
    """均方根误差，空序列返回0"""
    actual = np.asarray(actual, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if actual.shape[axis] == 0:
        shape = list(actual.shape)
        shape.pop(axis)
        return np.zeros(shape)
    return np.sqrt(np.mean((actual - reference) ** 2, axis=axis))


def motion_plane(points: np.ndarray, axes: Sequence[int] = (1, 2)) -> np.ndarray:
    """取运动平面（默认 y-z 白板平面）内的坐标"""
    return np.asarray(points, dtype=float)[:, list(axes)]


def bounding_extent(points: np.ndarray) -> Dict[str, float]:
    """
    包围盒尺寸

    Args:
        points: N×d 点集

    Returns:
        各轴跨度与对角线长度
    """
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        return {"diagonal": 0.0}
    span = points.max(axis=0) - points.min(axis=0)
    features = {f"span_{i}": float(s) for i, s in enumerate(span)}
    features["diagonal"] = float(np.linalg.norm(span))
    return features
