"""
File: src/main.py
主程序入口
协调规划、逆运动学、阻抗控制与仿真模块，提供规划器对比、闭环仿真、轨迹缩放、报告与实验协议的命令行接口
"""

import os
import sys
import json
import time
import logging
import argparse
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

# 本地模块导入
from src.config import Config, get_config
from src.trajectory.trajectory_io import load_csv, save_csv, scale
from src.trajectory.synth import SYNTH_KINDS, synth_trajectory
from src.simulation.harness import (ExperimentConfig, Perturbation, build_stream, load_experiment_config,
                                    load_simlog, planner_params, run_closed_loop, run_planner_comparison,
                                    save_simlog, track_stream, PLANNERS)
from src.simulation.metrics import compute_metrics
from src.simulation.report import REPORT_FORMATS, comparison_report, emit_report

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("main")

PROTOCOLS = ("compare-planners", "letters", "board")
EXIT_RUNTIME_ERROR = 1
EXIT_USAGE_ERROR = 2


class ExperimentRunner:
    """实验运行器，协调各模块完成规划、仿真与报告流程"""

    def __init__(self, config_path: Optional[str] = None):
        """
        初始化实验运行器

        Args:
            config_path: 全局配置文件路径（可选）
        """
        self.config = get_config(config_path)
        self.results_dir = self.config.get("paths", "results_dir")
        logger.info("实验运行器初始化完成")

    def run_plan(self, traj: str, planner: str, params_index: int, out_dir: str,
                 S_x: float = 1.0, S_t: float = 1.0) -> Dict[str, Any]:
        """
        纯运动学规划：输出规划轨迹CSV与相对参考轨迹的RMSE

        Args:
            traj: 轨迹文件或 synth: 描述串
            planner: harmonic | bangbang
            params_index: 参数组编号
            out_dir: 输出目录
            S_x, S_t: 空间/时间缩放

        Returns:
            结果字典
        """
        start_time = time.time()
        try:
            stream = scale(build_stream(traj), S_x, S_t)
            params = planner_params(params_index)
            tracked = track_stream(stream, planner, params)
            os.makedirs(out_dir, exist_ok=True)
            table = pd.DataFrame(
                np.column_stack([tracked["t"], tracked["reference"], tracked["position"], tracked["velocity"]]),
                columns=["t", "ref_x", "ref_y", "ref_z", "x", "y", "z", "vx", "vy", "vz"])
            output_file = os.path.join(out_dir, f"plan_{planner}_{params_index}.csv")
            table.to_csv(output_file, index=False, float_format="%.17g")

            row = run_planner_comparison(stream, params_index)[planner]
            elapsed_time = time.time() - start_time
            logger.info(f"规划完成，耗时: {elapsed_time:.2f}秒")
            return {"status": "success", "elapsed_time": elapsed_time, "output_file": output_file,
                    "samples": len(stream), "metrics": row}
        except Exception as e:
            logger.error(f"规划过程出错: {str(e)}", exc_info=True)
            return {"status": "error", "error": str(e), "error_type": type(e).__name__}

    def run_simulation(self, config_path: str, out_dir: Optional[str] = None) -> Dict[str, Any]:
        """
        按实验配置运行闭环仿真，保存仿真日志与指标

        Args:
            config_path: 实验配置文件
            out_dir: 输出目录（覆盖配置中的 output_dir）

        Returns:
            结果字典
        """
        start_time = time.time()
        try:
            experiment = load_experiment_config(config_path)
            out_dir = out_dir or experiment.output_dir or self.results_dir
            return self._simulate(experiment, out_dir, start_time)
        except Exception as e:
            logger.error(f"仿真过程出错: {str(e)}", exc_info=True)
            return {"status": "error", "error": str(e), "error_type": type(e).__name__}

    def _simulate(self, experiment: ExperimentConfig, out_dir: str, start_time: float) -> Dict[str, Any]:
        log = run_closed_loop(experiment)
        log_file = save_simlog(log, os.path.join(out_dir, f"{experiment.name}_simlog.csv"))
        report = compute_metrics(log, settle=experiment.settle,
                                 windows=[(p.start, p.end) for p in experiment.perturbations])
        files = emit_report(report, "csv", out_dir, experiment.name)
        settings_file = os.path.join(out_dir, f"{experiment.name}_settings.json")
        self.config.save_config(settings_file)
        elapsed_time = time.time() - start_time
        logger.info(f"仿真 {experiment.name} 完成，总耗时: {elapsed_time:.2f}秒")
        return {"status": "success", "elapsed_time": elapsed_time, "log_file": log_file,
                "settings_file": settings_file, "report_files": files, "summary": report["summary"]}

    def run_scale(self, traj: str, S_x: float, S_t: float, output_file: str) -> Dict[str, Any]:
        """缩放轨迹文件并保存"""
        try:
            stream = scale(load_csv(traj), S_x, S_t)
            save_csv(stream, output_file)
            return {"status": "success", "output_file": output_file, "samples": len(stream),
                    "rate": stream.rate}
        except Exception as e:
            logger.error(f"缩放过程出错: {str(e)}", exc_info=True)
            return {"status": "error", "error": str(e), "error_type": type(e).__name__}

    def run_report(self, log_path: str, fmt: str, out_dir: Optional[str] = None) -> Dict[str, Any]:
        """由仿真日志生成报告"""
        try:
            log = load_simlog(log_path)
            report = compute_metrics(log)
            out_dir = out_dir or os.path.dirname(os.path.abspath(log_path))
            stem = os.path.splitext(os.path.basename(log_path))[0].replace("_simlog", "")
            files = emit_report(report, fmt, out_dir, stem)
            return {"status": "success", "report_files": files, "summary": report["summary"]}
        except Exception as e:
            logger.error(f"报告生成出错: {str(e)}", exc_info=True)
            return {"status": "error", "error": str(e), "error_type": type(e).__name__}

    def run_synth(self, kind: str, params: Dict[str, Any], output_file: str) -> Dict[str, Any]:
        """生成合成轨迹CSV"""
        try:
            stream = synth_trajectory(kind, params)
            save_csv(stream, output_file)
            return {"status": "success", "output_file": output_file, "samples": len(stream)}
        except Exception as e:
            logger.error(f"轨迹合成出错: {str(e)}", exc_info=True)
            return {"status": "error", "error": str(e), "error_type": type(e).__name__}

    def run_protocol(self, name: str, out_dir: Optional[str] = None, quick: bool = False) -> Dict[str, Any]:
        """
        运行内置实验协议

        Args:
            name: compare-planners | letters | board
            out_dir: 输出目录
            quick: 缩短实验（仅运行代表性子集）

        Returns:
            结果字典
        """
        start_time = time.time()
        out_dir = os.path.join(out_dir or self.results_dir, name)
        logger.info(f"开始实验协议: {name}")
        try:
            if name == "compare-planners":
                result = self._protocol_compare_planners(out_dir)
            elif name == "letters":
                result = self._protocol_letters(out_dir, quick)
            elif name == "board":
                result = self._protocol_board(out_dir, quick)
            else:
                raise ValueError(f"未知实验协议: {name}，可选 {PROTOCOLS}")
            elapsed_time = time.time() - start_time
            logger.info(f"实验协议 {name} 完成，总耗时: {elapsed_time:.2f}秒")
            result.update({"status": "success", "protocol": name, "elapsed_time": elapsed_time,
                           "output_dir": out_dir})
            return result
        except Exception as e:
            logger.error(f"实验协议 {name} 出错: {str(e)}", exc_info=True)
            return {"status": "error", "protocol": name, "error": str(e), "error_type": type(e).__name__}

    def _protocol_compare_planners(self, out_dir: str) -> Dict[str, Any]:
        """在合成手写轨迹上用全部六组参数比较两种规划器"""
        stream = synth_trajectory("script", {"seed": 0})
        rows = [run_planner_comparison(stream, index) for index in range(1, 7)]
        report = comparison_report(rows)
        files = emit_report(report, "csv", out_dir, "comparison")
        files += emit_report(report, "svg", out_dir, "comparison")

        harmonic = report["tables"]["harmonic"]
        best = harmonic.assign(pos=np.hypot(harmonic["RMSE(y)"], harmonic["RMSE(z)"])).sort_values("pos")
        return {"report_files": files, "best_set": int(best.iloc[0]["N"])}

    def _protocol_letters(self, out_dir: str, quick: bool) -> Dict[str, Any]:
        """以1/4速度书写字母 B/F/H，比较较柔顺 (set1) 与较刚硬 (set2) 的FIC参数"""
        letters = ("H",) if quick else ("B", "F", "H")
        rows = []
        files = []
        for letter in letters:
            for preset in ("set1", "set2"):
                experiment = ExperimentConfig(
                    trajectory={"synth": "letter", "letter": letter, "speed": 0.2},
                    S_t=0.25, fic_preset=preset, name=f"letter_{letter}_{preset}")
                log = run_closed_loop(experiment)
                save_simlog(log, os.path.join(out_dir, f"{experiment.name}_simlog.csv"))
                report = compute_metrics(log, settle=0.0)
                files += emit_report(report, "svg", out_dir, experiment.name)
                summary = report["summary"]
                rows.append({"letter": letter, "preset": preset,
                             "rmse_reference": summary["rmse_reference_norm"],
                             "max_error_plan": summary["max_error_plan"],
                             "executed_extent": summary["executed_extent"],
                             "reference_extent": summary["reference_extent"],
                             "shape_similarity": summary["shape_similarity"]})
        files += emit_report({"tables": {"letters": pd.DataFrame(rows)}}, "csv", out_dir, "letters")
        return {"report_files": files, "runs": len(rows)}

    def _protocol_board(self, out_dir: str, quick: bool) -> Dict[str, Any]:
        """白板实验：圆与八字轨迹，含冲击扰动、白板平移与空间缩放"""
        impulse = get_config().get("perturbation")
        circle = {"synth": "circle", "radius": 0.1, "duration": 2.0}
        experiments = [
            ExperimentConfig(trajectory=circle, S_t=0.25, name="circle"),
            ExperimentConfig(trajectory=circle, S_t=0.25, name="circle_impulse",
                             perturbations=[Perturbation(kind="wrench", start=4.0,
                                                         duration=impulse["impulse_duration"],
                                                         force=(0.0, impulse["impulse_force"], 0.0))]),
        ]
        if not quick:
            experiments += [
                ExperimentConfig(trajectory=circle, S_x=0.5, S_t=0.25, name="circle_scaled"),
                ExperimentConfig(trajectory={"synth": "figure8", "A": 0.1, "B": 0.05, "duration": 4.0},
                                 S_t=0.25, name="figure8"),
                ExperimentConfig(trajectory={"synth": "figure8", "A": 0.1, "B": 0.05, "duration": 4.0},
                                 S_t=0.25, name="figure8_board_shift",
                                 perturbations=[Perturbation(kind="board_shift", start=6.0, duration=4.0,
                                                             offset=(0.0, 0.0, 0.02))]),
            ]

        rows = []
        files = []
        for experiment in experiments:
            log = run_closed_loop(experiment)
            save_simlog(log, os.path.join(out_dir, f"{experiment.name}_simlog.csv"))
            report = compute_metrics(log, settle=experiment.settle,
                                     windows=[(p.start, p.end) for p in experiment.perturbations])
            files += emit_report(report, "svg", out_dir, experiment.name)
            row = {"experiment": experiment.name}
            row.update({k: v for k, v in report["summary"].items() if np.isscalar(v)})
            rows.append(row)
        files += emit_report({"tables": {"board": pd.DataFrame(rows)}}, "csv", out_dir, "board")
        return {"report_files": files, "runs": len(rows)}


class JsonErrorParser(argparse.ArgumentParser):
    """用法错误输出一行JSON到stderr，退出码2"""

    def error(self, message: str):
        sys.stderr.write(json.dumps({"status": "error", "error_type": "UsageError",
                                     "error": message}, ensure_ascii=False) + "\n")
        sys.exit(EXIT_USAGE_ERROR)


def _parse_key_values(items: List[str]) -> Dict[str, Any]:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"参数应为 key=value: {item}")
        key, value = item.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _apply_overrides(config: Config, items: List[str]) -> None:
    """将 section.key=value 形式的覆盖写入全局配置"""
    for key, value in _parse_key_values(items).items():
        section, _, name = key.partition(".")
        if not section or not name:
            raise argparse.ArgumentTypeError(f"配置覆盖应为 section.key=value: {key}")
        if config.get(section) is None:
            raise argparse.ArgumentTypeError(f"未知配置部分: {section}")
        config.set(section, name, value)


def parse_args(argv: Optional[List[str]] = None):
    """解析命令行参数"""
    parser = JsonErrorParser(description='机械臂动作模仿：谐波规划器 + QP-IK + 分形阻抗控制仿真工具')
    parser.add_argument('--settings', '-s', type=str, help='全局配置文件路径')
    parser.add_argument('--verbose', '-v', action='store_true', help='启用详细日志')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help='覆盖全局配置项（可重复），如 ik.gain=20')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=JsonErrorParser)

    plan = sub.add_parser('plan', help='运动学规划与RMSE')
    plan.add_argument('--traj', required=True, help='轨迹CSV或 synth:kind,key=value 描述串')
    plan.add_argument('--planner', choices=PLANNERS, default='harmonic', help='规划器')
    plan.add_argument('--params', type=int, choices=range(1, 7), default=3, help='参数组编号 (1-6)')
    plan.add_argument('--sx', type=float, default=1.0, help='空间缩放系数')
    plan.add_argument('--st', type=float, default=1.0, help='时间缩放系数')
    plan.add_argument('--out', required=True, help='输出目录')

    simulate = sub.add_parser('simulate', help='闭环仿真')
    simulate.add_argument('--config', '-c', required=True, help='实验配置文件 (JSON)')
    simulate.add_argument('--out', help='输出目录')

    scale_cmd = sub.add_parser('scale', help='轨迹空间/时间缩放')
    scale_cmd.add_argument('--traj', required=True, help='轨迹CSV')
    scale_cmd.add_argument('--sx', type=float, required=True, help='空间缩放系数')
    scale_cmd.add_argument('--st', type=float, required=True, help='时间缩放系数')
    scale_cmd.add_argument('--out', required=True, help='输出CSV')

    report = sub.add_parser('report', help='由仿真日志生成报告')
    report.add_argument('--log', required=True, help='仿真日志CSV')
    report.add_argument('--format', choices=REPORT_FORMATS, default='csv', help='报告格式')
    report.add_argument('--out', help='输出目录')

    protocol = sub.add_parser('protocol', help='运行内置实验协议')
    protocol.add_argument('name', choices=PROTOCOLS, help='协议名称')
    protocol.add_argument('--out', help='输出目录')
    protocol.add_argument('--quick', action='store_true', help='仅运行代表性子集')

    synth = sub.add_parser('synth', help='生成合成轨迹CSV')
    synth.add_argument('kind', choices=SYNTH_KINDS, help='轨迹类型')
    synth.add_argument('params', nargs='*', help='key=value 形式的生成参数')
    synth.add_argument('--out', required=True, help='输出CSV')

    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """主程序入口"""
    args = parse_args(argv)

    # 设置日志级别
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    runner = ExperimentRunner(args.settings)
    try:
        _apply_overrides(runner.config, args.overrides)
        params = _parse_key_values(args.params) if args.command == 'synth' else {}
    except argparse.ArgumentTypeError as e:
        result = {"status": "error", "error_type": "UsageError", "error": str(e)}
        sys.stderr.write(json.dumps(result, ensure_ascii=False) + "\n")
        return EXIT_USAGE_ERROR

    if args.command == 'plan':
        result = runner.run_plan(args.traj, args.planner, args.params, args.out, args.sx, args.st)
    elif args.command == 'simulate':
        result = runner.run_simulation(args.config, args.out)
    elif args.command == 'scale':
        result = runner.run_scale(args.traj, args.sx, args.st, args.out)
    elif args.command == 'report':
        result = runner.run_report(args.log, args.format, args.out)
    elif args.command == 'protocol':
        result = runner.run_protocol(args.name, args.out, args.quick)
    else:
        result = runner.run_synth(args.kind, params, args.out)

    # 输出结果
    if result["status"] == "success":
        print(json.dumps(result, ensure_ascii=False, default=str))
        return 0
    sys.stderr.write(json.dumps(result, ensure_ascii=False, default=str) + "\n")
    return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
