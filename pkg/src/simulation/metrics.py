"""
File: src/simulation/metrics.py
实验指标计算
由仿真日志计算运动平面内的跟踪均方根误差、最大误差、姿态误差、交互力序列、形状相似度与扰动恢复时间
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

# 本地模块导入
from ..config import get_config
from ..utils.geometry_utils import rmse, shape_similarity, bounding_extent, motion_plane

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("metrics")

AXES = ("x", "y", "z")
# 恢复阈值下限 (m)
RECOVERY_FLOOR = 1e-4


def _xyz(log: pd.DataFrame, prefix: str) -> np.ndarray:
    return log[[f"{prefix}_{a}" for a in AXES]].to_numpy(dtype=float)


def orientation_error(log: pd.DataFrame) -> np.ndarray:
    """期望姿态与实际末端姿态之间的夹角 (rad)"""
    desired = Rotation.from_rotvec(log[["plan_rx", "plan_ry", "plan_rz"]].to_numpy(dtype=float))
    actual = Rotation.from_rotvec(log[["ee_rx", "ee_ry", "ee_rz"]].to_numpy(dtype=float))
    return (desired.inv() * actual).magnitude()


def perturbation_windows(log: pd.DataFrame) -> List[Tuple[float, float]]:
    """
    由日志中非零外力旋量的连续区间推断扰动时间窗

    Returns:
        [(start, end), ...]，end 为最后一个非零采样之后的时刻
    """
    if len(log) == 0:
        return []
    wrench = log[["fext_x", "fext_y", "fext_z", "text_x", "text_y", "text_z"]].to_numpy()
    active = np.any(wrench != 0.0, axis=1)
    t = log["t"].to_numpy()
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    windows = []
    edges = np.diff(np.concatenate([[0], active.astype(int), [0]]))
    for s, e in zip(np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]):
        windows.append((float(t[s]), float(t[e - 1] + dt)))
    return windows


def recovery_time(t: np.ndarray, error: np.ndarray, window: Tuple[float, float],
                  pre_window: float) -> Dict[str, Any]:
    """
    扰动恢复时间：释放后误差回落到扰动前最大误差以下所需时间

    Args:
        t: 时间序列
        error: 误差范数序列
        window: 扰动时间窗 (start, end)
        pre_window: 扰动前统计窗口长度 (s)

    Returns:
        含 start, end, pre_max, peak, recovery_time（未恢复为NaN）的字典
    """
    start, end = window
    pre = (t >= start - pre_window) & (t < start)
    pre_max = float(np.max(error[pre])) if np.any(pre) else 0.0
    threshold = max(pre_max, RECOVERY_FLOOR)
    during = (t >= start) & (t < end)
    after = t >= end
    peak = float(np.max(error[during | after])) if np.any(during | after) else 0.0

    recovered = np.nonzero(after & (error <= threshold))[0]
    elapsed = float(t[recovered[0]] - end) if recovered.size else float("nan")
    return {"start": start, "end": end, "pre_max": pre_max, "peak": peak,
            "threshold": threshold, "recovery_time": elapsed}


def steady_mask(t: np.ndarray, windows: List[Tuple[float, float]], settle: float,
                recovery_window: float) -> np.ndarray:
    """稳态区间：去除起始过渡段以及每个扰动窗口及其后的恢复窗口"""
    mask = t >= settle
    for start, end in windows:
        mask &= ~((t >= start) & (t < end + recovery_window))
    return mask


def compute_metrics(log: pd.DataFrame, settle: float = 1.0,
                    windows: Optional[List[Tuple[float, float]]] = None) -> Dict[str, Any]:
    """
    计算实验指标

    Args:
        log: 仿真日志
        settle: 稳态统计起始时间 (s)
        windows: 扰动时间窗（None时由外力列推断）

    Returns:
        指标报告字典：summary 标量、tables 表格、series 时间序列
    """
    if len(log) == 0:
        raise ValueError("仿真日志为空，无法计算指标")
    perturbation = get_config().get("perturbation")

    t = log["t"].to_numpy(dtype=float)
    ref = _xyz(log, "ref")
    plan = _xyz(log, "plan")
    ee = _xyz(log, "ee")
    fext = log[["fext_x", "fext_y", "fext_z"]].to_numpy(dtype=float)

    err_plan = np.linalg.norm(ee - plan, axis=1)
    err_ref = np.linalg.norm(ee - ref, axis=1)
    err_rot = orientation_error(log)
    if windows is None:
        windows = perturbation_windows(log)
    steady = steady_mask(t, windows, settle, float(perturbation["recovery_window"]))
    if not np.any(steady):
        steady = np.ones_like(t, dtype=bool)

    rmse_plan = rmse(ee, plan)
    rmse_ref = rmse(ee, ref)
    tracking = pd.DataFrame({
        "axis": list(AXES),
        "RMSE_vs_plan": rmse_plan,
        "RMSE_vs_reference": rmse_ref,
        "max_error_vs_plan": np.max(np.abs(ee - plan), axis=0),
    })

    recoveries = [recovery_time(t, err_plan, w, float(perturbation["pre_window"])) for w in windows]
    recovery_table = pd.DataFrame(recoveries, columns=["start", "end", "pre_max", "peak",
                                                       "threshold", "recovery_time"])

    ee_plane = motion_plane(ee[steady])
    ref_plane = motion_plane(ref[steady])
    summary = {
        "ticks": int(len(log)),
        "duration": float(t[-1] - t[0]) if len(t) > 1 else 0.0,
        "rmse_plan_norm": float(np.sqrt(np.mean(err_plan ** 2))),
        "rmse_reference_norm": float(np.sqrt(np.mean(err_ref ** 2))),
        "max_error_plan": float(np.max(err_plan)),
        "max_error_plan_steady": float(np.max(err_plan[steady])),
        "max_orientation_error_steady": float(np.max(err_rot[steady])),
        "max_fic_force": float(log["fic_force_norm"].max()),
        "max_fic_axis_force_steady": float(np.max(np.abs(
            log[["fic_fx", "fic_fy", "fic_fz"]].to_numpy()[steady]))),
        "max_fic_torque": float(log["fic_torque_norm"].max()),
        "max_interaction_force": float(np.max(np.linalg.norm(fext, axis=1))),
        "shape_similarity": shape_similarity(ee_plane, ref_plane),
        "executed_extent": bounding_extent(ee_plane)["diagonal"],
        "reference_extent": bounding_extent(ref_plane)["diagonal"],
        "perturbations": len(windows),
        "max_recovery_time": float(np.nanmax(recovery_table["recovery_time"]))
        if len(recoveries) and not recovery_table["recovery_time"].isna().all() else float("nan"),
        "unrecovered": int(recovery_table["recovery_time"].isna().sum()),
    }
    if summary["unrecovered"]:
        logger.warning(f"{summary['unrecovered']} 次扰动后误差未恢复")

    series = pd.DataFrame({
        "t": t,
        "error_plan": err_plan,
        "error_reference": err_ref,
        "orientation_error": err_rot,
        "fic_force_norm": log["fic_force_norm"].to_numpy(dtype=float),
        "interaction_force_norm": np.linalg.norm(fext, axis=1),
    })
    paths = {"reference": ref, "plan": plan, "executed": ee}
    return {"summary": summary, "tables": {"tracking": tracking, "recovery": recovery_table},
            "series": series, "paths": paths}
