"""
C3DVQA 命令行入口

    python main.py train --config run.json
    python main.py eval --config run.json --checkpoint runs/model.ckpt
    python main.py predict --checkpoint runs/model.ckpt --reference ref.y --distorted dist.y --json
    python main.py gradcheck
    python main.py sweep-frames --config run.json --frames-list 15 30
    python main.py dump-maps --checkpoint runs/model.ckpt --reference ref.y --distorted dist.y --out-dir maps
    python main.py psnr --reference ref.y --distorted dist.y

退出码：0 成功；1 命令失败；2 梯度检查未通过。
"""
import argparse
import json
import math
import sys
from typing import Any, Dict, List, Optional

from commands import CommandResponse, get_command_manager
from config.logging_config import get_logger, setup_logging
from models.errors import ConfigError
from models.run_config import load_run_config

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_GRADCHECK = 2

# 命令行参数名 -> RunConfig 字段
OVERRIDES = {
    "manifest": "manifest",
    "frames": "frames",
    "window": "window",
    "preset": "preset",
    "lr": "lr",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "draws_per_video": "draws_per_video",
    "lambda1": "lambda1",
    "lambda2": "lambda2",
    "seed": "seed",
    "repeats": "repeats",
    "split_fraction": "split_fraction",
    "train_per_repeat": "train_per_repeat",
    "output_dir": "output_dir",
    "log_every": "log_every",
    "timeout": "timeout",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="以JSON输出结果")
    common.add_argument("--log-level", default="INFO", help="日志级别")
    common.add_argument("--log-file", default=None, help="日志文件路径")
    return common


def _add_run_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON 运行配置")
    parser.add_argument("--manifest")
    parser.add_argument("--frames", type=int, help="片段帧数 D")
    parser.add_argument("--window", type=int, help="空间窗口边长")
    parser.add_argument("--preset", choices=["live", "csiq"])
    parser.add_argument("--lr", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--draws-per-video", type=int)
    parser.add_argument("--lambda1", type=float)
    parser.add_argument("--lambda2", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--repeats", type=int)
    parser.add_argument("--split-fraction", type=float)
    parser.add_argument("--output-dir")
    parser.add_argument("--log-every", type=int)
    parser.add_argument("--timeout", type=int, help="命令超时（秒）")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="c3dvqa", description="C3DVQA 全参考视频质量评价工具")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[common], help="训练网络")
    _add_run_config_args(train)

    evaluate = sub.add_parser("eval", parents=[common], help="重复划分评估")
    _add_run_config_args(evaluate)
    evaluate.add_argument("--checkpoint")
    evaluate.add_argument("--scorer", choices=["c3dvqa", "psnr"], default="c3dvqa")
    evaluate.add_argument("--train-per-repeat", action="store_true", default=None,
                          help="每次划分重新训练")

    sweep = sub.add_parser("sweep-frames", parents=[common], help="片段帧数扫描")
    _add_run_config_args(sweep)
    sweep.add_argument("--frames-list", type=int, nargs="+", help="待扫描的 D 列表")

    predict = sub.add_parser("predict", parents=[common], help="对一对视频打分")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--reference", required=True)
    predict.add_argument("--distorted", required=True)
    predict.add_argument("--batch-size", type=int)

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="梯度有限差分检查")
    gradcheck.add_argument("--seed", type=int, default=0)

    maps = sub.add_parser("dump-maps", parents=[common], help="输出中间响应图")
    maps.add_argument("--checkpoint", required=True)
    maps.add_argument("--reference", required=True)
    maps.add_argument("--distorted", required=True)
    maps.add_argument("--out-dir", required=True)
    maps.add_argument("--segment", type=int, default=0)
    maps.add_argument("--frames", type=int, nargs="*", help="帧索引，缺省为全部")

    psnr = sub.add_parser("psnr", parents=[common], help="PSNR 基线")
    psnr.add_argument("--reference", required=True)
    psnr.add_argument("--distorted", required=True)
    return parser


def _jsonable(value: Any) -> Any:
    """非有限浮点数写成 null"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def command_kwargs(args: argparse.Namespace) -> Dict[str, Any]:
    """把解析后的参数转换为命令关键字参数"""
    if args.command in ("train", "eval", "sweep-frames"):
        overrides = {field: getattr(args, arg, None) for arg, field in OVERRIDES.items()}
        config = load_run_config(args.config, overrides)
        kwargs: Dict[str, Any] = {"config": config}
        if args.command == "eval":
            kwargs.update(checkpoint=args.checkpoint, scorer=args.scorer)
        if args.command == "sweep-frames":
            kwargs["frames"] = args.frames_list
        return kwargs
    if args.command == "predict":
        return {"checkpoint": args.checkpoint, "reference": args.reference,
                "distorted": args.distorted, "batch_size": args.batch_size}
    if args.command == "gradcheck":
        return {"seed": args.seed}
    if args.command == "dump-maps":
        return {"checkpoint": args.checkpoint, "reference": args.reference, "distorted": args.distorted,
                "out_dir": args.out_dir, "segment": args.segment, "frames": args.frames}
    return {"reference": args.reference, "distorted": args.distorted}


def render(command: str, data: Dict[str, Any]) -> List[str]:
    """人类可读输出"""
    if command == "predict":
        lines = [f"segment frame={s['frame']} row={s['row']} col={s['col']} score={s['score']:.6f}"
                 for s in data["segments"]]
        lines.append(f"score: {data['score']:.6f}")
        if "scaled_score" in data:
            lines.append(f"scaled_score: {data['scaled_score']:.6f}")
        return lines
    if command == "gradcheck":
        lines = [f"{'layer':<16}{'max_rel_error':>16}{'tolerance':>12}  result"]
        for row in data["rows"]:
            lines.append(f"{row['name']:<16}{row['max_rel_error']:>16.3e}{row['tolerance']:>12.0e}  "
                         f"{'PASS' if row['passed'] else 'FAIL'}")
        return lines
    if command == "psnr":
        return ["psnr: inf dB (identical)" if data["identical"] else f"psnr: {data['psnr']:.4f} dB"]
    if command == "sweep-frames":
        lines = ["D,PLCC,SROCC,epoch_seconds"]
        lines += [f"{r['D']},{r['PLCC']:.4f},{r['SROCC']:.4f},{r['epoch_seconds']:.3f}" for r in data["rows"]]
        return lines
    if command == "dump-maps":
        return data["files"]
    return [f"{key}: {value}" for key, value in data.items() if not isinstance(value, (list, dict))]


def exit_code(command: str, response: CommandResponse) -> int:
    if not response.success:
        return EXIT_FAILED
    if command == "gradcheck" and not response.data.get("passed", False):
        return EXIT_GRADCHECK
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level, log_file=args.log_file, console_output=True)

    try:
        kwargs = command_kwargs(args)
    except ConfigError as e:
        logger.error(f"❌ {e}")
        return EXIT_FAILED

    config = kwargs.get("config")
    timeout = config.timeout if config is not None else None
    response = get_command_manager().run(args.command, timeout=timeout, **kwargs)
    if not response.success:
        print(f"error: {response.error}", file=sys.stderr)
        return EXIT_FAILED

    if args.json:
        print(json.dumps(_jsonable(response.data), ensure_ascii=False, indent=2))
    else:
        print("\n".join(render(args.command, response.data)))
    return exit_code(args.command, response)


if __name__ == "__main__":
    sys.exit(main())
