"""
File: src/simulation/report.py
报告输出
将指标报告写为CSV表格（与规划器对比表的列结构一致）和自包含的SVG矢量图
"""

import os
import logging
from typing import Any, Dict, List

import numpy as np
import pandas as pd
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("report")

REPORT_FORMATS = ("csv", "svg")
COMPARISON_COLUMNS = ["N", "RMSE(y)", "RMSE(z)", "RMSE(ẏ)", "RMSE(ż)"]
DECIMALS = 3

plt.rcParams["svg.hashsalt"] = "motion-imitation"
plt.rcParams["svg.fonttype"] = "path"


def _ensure_dir(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"无法创建输出目录 {out_dir}: {e}") from e
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"输出目录不可写: {out_dir}")


def _write_csv(report: Dict[str, Any], out_dir: str, stem: str) -> List[str]:
    tables = report.get("tables") or {}
    if not tables:
        tables = {"comparison": pd.DataFrame(columns=COMPARISON_COLUMNS)}
    files = []
    for name, table in tables.items():
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        table.round(DECIMALS).to_csv(path, index=False)
        files.append(path)

    summary = report.get("summary")
    if summary:
        path = os.path.join(out_dir, f"{stem}_summary.csv")
        rows = [{"metric": k, "value": round(float(v), DECIMALS) if np.isfinite(v) else v}
                for k, v in summary.items() if np.isscalar(v)]
        pd.DataFrame(rows, columns=["metric", "value"]).to_csv(path, index=False)
        files.append(path)
    return files


def _save(fig, path: str) -> str:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _plot_paths(paths: Dict[str, np.ndarray], out_dir: str, stem: str) -> str:
    """运动平面 (y-z) 内的参考、规划与执行轨迹"""
    fig, ax = plt.subplots(figsize=(6, 6))
    styles = {"reference": ("k--", 1.0), "plan": ("b-", 1.0), "executed": ("r-", 1.5)}
    for name, points in paths.items():
        points = np.asarray(points)
        if len(points) == 0:
            continue
        style, width = styles.get(name, ("g-", 1.0))
        ax.plot(points[:, 1], points[:, 2], style, linewidth=width, label=name)
    ax.set_xlabel("y (m)")
    ax.set_ylabel("z (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return _save(fig, os.path.join(out_dir, f"{stem}_paths.svg"))


def _plot_series(series: pd.DataFrame, out_dir: str, stem: str) -> str:
    """误差与力的时间序列"""
    fig, (ax_err, ax_force) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    t = series["t"].to_numpy()
    for column in ("error_plan", "error_reference"):
        if column in series:
            ax_err.plot(t, series[column].to_numpy(), label=column)
    ax_err.set_ylabel("error (m)")
    ax_err.legend(loc="best")
    ax_err.grid(True, alpha=0.3)
    for column in ("fic_force_norm", "interaction_force_norm"):
        if column in series:
            ax_force.plot(t, series[column].to_numpy(), label=column)
    ax_force.set_xlabel("t (s)")
    ax_force.set_ylabel("force (N)")
    ax_force.legend(loc="best")
    ax_force.grid(True, alpha=0.3)
    return _save(fig, os.path.join(out_dir, f"{stem}_forces.svg"))


def _plot_tables(tables: Dict[str, pd.DataFrame], out_dir: str, stem: str) -> str:
    """规划器对比表的RMSE柱状图"""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / max(len(tables), 1)
    for offset, (name, table) in enumerate(tables.items()):
        if not set(COMPARISON_COLUMNS).issubset(table.columns) or table.empty:
            continue
        index = np.arange(len(table))
        for ax, columns in zip(axes, (COMPARISON_COLUMNS[1:3], COMPARISON_COLUMNS[3:5])):
            values = table[columns].to_numpy(dtype=float)
            ax.bar(index + offset * width, np.linalg.norm(values, axis=1), width, label=name)
            ax.set_xticks(index + 0.4 - width / 2)
            ax.set_xticklabels([str(int(n)) for n in table["N"]])
    axes[0].set_ylabel("position RMSE (m)")
    axes[1].set_ylabel("velocity RMSE (m/s)")
    for ax in axes:
        ax.set_xlabel("N")
        ax.grid(True, alpha=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best")
    return _save(fig, os.path.join(out_dir, f"{stem}_comparison.svg"))


def _write_svg(report: Dict[str, Any], out_dir: str, stem: str) -> List[str]:
    files = []
    if report.get("paths"):
        files.append(_plot_paths(report["paths"], out_dir, stem))
    series = report.get("series")
    if series is not None and len(series):
        files.append(_plot_series(series, out_dir, stem))
    tables = report.get("tables") or {}
    if any(set(COMPARISON_COLUMNS).issubset(t.columns) for t in tables.values()):
        files.append(_plot_tables(tables, out_dir, stem))
    if not files:
        fig, ax = plt.subplots(figsize=(4, 2))
        ax.axis("off")
        ax.text(0.5, 0.5, "empty report", ha="center", va="center")
        files.append(_save(fig, os.path.join(out_dir, f"{stem}.svg")))
    return files


def emit_report(report: Dict[str, Any], fmt: str, out_dir: str, stem: str = "report") -> List[str]:
    """
    输出报告文件

    Args:
        report: 指标报告（tables / summary / series / paths）
        fmt: csv 或 svg
        out_dir: 输出目录
        stem: 文件名前缀

    Returns:
        写出的文件路径列表
    """
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"不支持的报告格式: {fmt}，可选 {REPORT_FORMATS}")
    _ensure_dir(out_dir)
    files = _write_csv(report, out_dir, stem) if fmt == "csv" else _write_svg(report, out_dir, stem)
    logger.info(f"报告已输出 ({fmt}): {len(files)} 个文件 -> {out_dir}")
    return files


def comparison_report(rows: List[Dict[str, Dict[str, float]]]) -> Dict[str, Any]:
    """
    将逐参数组的对比结果整理为两张表（谐波规划器、bang-bang规划器）

    Args:
        rows: run_planner_comparison 的结果列表

    Returns:
        报告字典
    """
    tables = {}
    for planner in ("harmonic", "bangbang"):
        tables[planner] = pd.DataFrame([r[planner] for r in rows], columns=COMPARISON_COLUMNS)
    return {"tables": tables}
