"""
File: src/ik/box_qp.py
盒约束二次规划求解器
有界变量最小二乘的主动集迭代：min ½xᵀHx + gᵀx, s.t. lo ≤ x ≤ hi
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("box_qp")

KKT_TOLERANCE = 1e-10


class QPSolverError(ValueError):
    """二次规划求解错误：Hessian非正定、边界不可行或迭代超限"""


@dataclass
class BoxQpResult:
    """求解结果"""
    x: np.ndarray
    active_mask: np.ndarray     # -1 下界，+1 上界，0 自由
    nit: int
    kkt: float


def kkt_residual(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 x: np.ndarray) -> float:
    """
    KKT残差：投影梯度的无穷范数 ‖x - clip(x - ∇f, lo, hi)‖∞

    Args:
        H, g: 二次目标的Hessian与一次项
        lo, hi: 边界
        x: 候选解

    Returns:
        残差（可行最优点为0）
    """
    grad = H @ x + g
    projected = np.clip(x - grad, lo, hi)
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x - projected)))


def _validate(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    n = g.shape[0]
    if H.shape != (n, n) or lo.shape != (n,) or hi.shape != (n,):
        raise QPSolverError(f"维度不一致: H{H.shape}, g{g.shape}, lo{lo.shape}, hi{hi.shape}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))):
        raise QPSolverError("H 或 g 含有非有限数值")
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise QPSolverError("边界含有NaN")
    if np.any(lo > hi):
        bad = np.nonzero(lo > hi)[0].tolist()
        raise QPSolverError(f"边界不可行 (lo > hi)，变量 {bad}")
    if not np.allclose(H, H.T, rtol=1e-10, atol=1e-12):
        raise QPSolverError("H 不对称")
    if n == 0:
        return
    try:
        cho_factor(H)
    except LinAlgError as e:
        raise QPSolverError(f"H 非正定: {e}") from e


def _solve_free(H: np.ndarray, g: np.ndarray, x: np.ndarray, free: np.ndarray) -> np.ndarray:
    """固定非自由变量，求自由变量的无约束极小"""
    fixed = ~free
    rhs = -(g[free] + H[np.ix_(free, fixed)] @ x[fixed])
    return cho_solve(cho_factor(H[np.ix_(free, free)]), rhs)


def solve_box_qp(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 max_iter: Optional[int] = None, tol: float = KKT_TOLERANCE) -> BoxQpResult:
    """
    主动集法求解盒约束凸二次规划

    Args:
        H: n×n 对称正定矩阵
        g: n维一次项
        lo, hi: 下界与上界（允许 ±inf）
        max_iter: 主循环最大迭代次数，None时为 10·n + 10
        tol: 乘子符号判定容差

    Returns:
        求解结果
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    _validate(H, g, lo, hi)

    n = g.shape[0]
    if n == 0:
        return BoxQpResult(x=np.zeros(0), active_mask=np.zeros(0), nit=0, kkt=0.0)
    if max_iter is None:
        max_iter = 10 * n + 10

    # 上下界重合的变量始终固定
    pinned = lo == hi

    x = cho_solve(cho_factor(H), -g)
    on_bound = np.zeros(n)
    mask = (x <= lo) | pinned
    x[mask] = lo[mask]
    on_bound[mask] = -1
    mask = (x >= hi) & ~pinned
    x[mask] = hi[mask]
    on_bound[mask] = 1

    # 初始化：自由变量最小二乘解可行为止
    free = on_bound == 0
    while np.any(free):
        z = _solve_free(H, g, x, free)
        free_idx = np.nonzero(free)[0]
        low = z < lo[free_idx]
        high = z > hi[free_idx]
        x[free_idx] = np.clip(z, lo[free_idx], hi[free_idx])
        on_bound[free_idx[low]] = -1
        on_bound[free_idx[high]] = 1
        if not (np.any(low) or np.any(high)):
            break
        free = on_bound == 0

    nit = 0
    for nit in range(1, max_iter + 1):
        grad = H @ x + g
        violation = grad * on_bound
        violation[on_bound == 0] = -np.inf
        violation[pinned] = -np.inf
        if not np.any(violation > tol):
            break

        on_bound[int(np.argmax(violation))] = 0
        while True:
            free = on_bound == 0
            if not np.any(free):
                break
            free_idx = np.nonzero(free)[0]
            x_free = x[free_idx]
            z = _solve_free(H, g, x, free)

            lbv = np.nonzero(z < lo[free_idx])[0]
            ubv = np.nonzero(z > hi[free_idx])[0]
            if lbv.size == 0 and ubv.size == 0:
                x[free_idx] = z
                break

            v = np.concatenate([lbv, ubv])
            alphas = np.concatenate([lo[free_idx[lbv]] - x_free[lbv],
                                     hi[free_idx[ubv]] - x_free[ubv]]) / (z[v] - x_free[v])
            i = int(np.argmin(alphas))
            alpha = float(np.clip(alphas[i], 0.0, 1.0))
            x[free_idx] = x_free + alpha * (z - x_free)

            blocking = free_idx[v[i]]
            if i < lbv.size:
                x[blocking] = lo[blocking]
                on_bound[blocking] = -1
            else:
                x[blocking] = hi[blocking]
                on_bound[blocking] = 1
    else:
        residual = kkt_residual(H, g, lo, hi, x)
        if residual > 1e-8:
            raise QPSolverError(f"主动集迭代 {max_iter} 次未收敛，KKT残差 {residual:.3e}")

    residual = kkt_residual(H, g, lo, hi, x)
    logger.debug(f"盒约束QP求解完成: n={n}, 迭代 {nit} 次, KKT残差 {residual:.2e}")
    return BoxQpResult(x=x, active_mask=on_bound, nit=nit, kkt=residual)


def solve_box_ls(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 max_iter: Optional[int] = None) -> np.ndarray:
    """
    盒约束二次规划唯一极小点

    Args:
        H: n×n 对称正定矩阵
        g: n维一次项
        lo, hi: 下界与上界

    Returns:
        极小点 x
    """
    return solve_box_qp(H, g, lo, hi, max_iter=max_iter).x
