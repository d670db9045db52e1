import logging
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from jsonargparse import ArgumentParser, Namespace

from hafpn.core.tensor import ShapeError
from hafpn.data.dataset import (
    DEFAULT_CLASSES,
    load_ground_truth,
    read_detections,
    read_index,
    split_dataset,
    write_split,
)
from hafpn.data.synthetic import make_defect_samples, write_defect_dataset
from hafpn.data.tensor_io import load_tensor, save_levels
from hafpn.data.typing import SplitSpec
from hafpn.evaluation.ablation import ablation_summary, run_ablation
from hafpn.evaluation.detection_metrics import evaluate
from hafpn.evaluation.gradcheck_suite import Scope, run_suite
from hafpn.networks.pyramid import LEVEL_NAMES, init_pyramid, pyramid_forward
from hafpn.utils.config import NeckConfig, config_to_text, load_config, with_overrides
from hafpn.utils.heatmap import write_pgm, write_png
from hafpn.utils.logging import setup_logger
from hafpn.utils.profiling import bench_forward

_logger = logging.getLogger("hafpn")

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_INPUT = 2


def _add_neck_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--config", type=Optional[str], default=None, help="key = value neck config"
    )
    parser.add_argument(
        "--variant", type=Optional[Literal["fpn", "pafpn", "hafpn"]], default=None
    )
    parser.add_argument("--use-emsa", type=Optional[bool], default=None)
    parser.add_argument("--use-ca", type=Optional[bool], default=None)
    parser.add_argument("--heads", type=Optional[int], default=None)
    parser.add_argument("--reduction", type=Optional[int], default=None)
    parser.add_argument(
        "--seed", type=Optional[int], default=None, help="parameter seed"
    )


def _forward_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Backbone and neck forward pass.")
    _add_neck_arguments(parser)
    parser.add_argument("--input", type=str, required=True, help="(1, 3, H, W)")
    parser.add_argument("--output", type=str, required=True, help="level directory")
    parser.add_argument(
        "--identity-ham",
        type=bool,
        default=False,
        help="replace every HAM block with the identity",
    )
    return parser


def _gradcheck_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Finite-difference gradient checks.")
    parser.add_argument("--scope", type=Scope, default="layer")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--num-seeds", type=Optional[int], default=None)
    parser.add_argument("--output", type=Optional[str], default=None, help="CSV")
    return parser


def _eval_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Precision, recall, AP and mAP.")
    parser.add_argument("--gt", type=str, required=True, help="dataset directory")
    parser.add_argument("--input", type=str, required=True, help="detection file")
    parser.add_argument("--output", type=str, required=True, help="report directory")
    parser.add_argument("--iou-thr", type=float, default=0.5)
    parser.add_argument(
        "--ap-mode", type=Literal["all_points", "101_point"], default="all_points"
    )
    return parser


def _heatmap_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Activation-magnitude heatmap.")
    parser.add_argument("--input", type=str, required=True, help="(1, C, H, W)")
    parser.add_argument("--output", type=str, required=True, help="PGM file")
    parser.add_argument(
        "--colormap",
        type=Optional[str],
        default=None,
        help="also write a PNG with this matplotlib colormap",
    )
    return parser


def _split_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Seeded train/val/test split.")
    parser.add_argument("--input", type=str, required=True, help="dataset index")
    parser.add_argument("--output", type=str, required=True)
    parser.add_argument("--fractions", type=list[float], default=[0.8, 0.1, 0.1])
    parser.add_argument("--seed", type=int, default=0)
    return parser


def _bench_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Forward timing per neck variant.")
    _add_neck_arguments(parser)
    parser.add_argument("--input-shape", type=list[int], default=[1, 3, 32, 32])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--output", type=Optional[str], default=None, help="CSV")
    return parser


def _ablation_parser() -> ArgumentParser:
    parser = ArgumentParser(description="FPN/PAFPN with and without HAM.")
    _add_neck_arguments(parser)
    parser.add_argument("--num-images", type=int, default=8)
    parser.add_argument("--size", type=list[int], default=[32, 32])
    parser.add_argument("--data-seed", type=int, default=0)
    parser.add_argument("--iou-thr", type=float, default=0.5)
    parser.add_argument("--output", type=str, required=True)
    return parser


def _synth_parser() -> ArgumentParser:
    parser = ArgumentParser(description="Synthetic defect dataset.")
    parser.add_argument("--output", type=str, required=True)
    parser.add_argument("--num-images", type=int, default=16)
    parser.add_argument("--size", type=list[int], default=[32, 32])
    parser.add_argument("--max-defects", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="hafpn",
        description="Hybrid-attention feature pyramid necks at desk scale.",
    )
    parser.add_argument(
        "--log-level",
        type=Literal["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
    )
    subcommands = parser.add_subcommands(dest="command")
    for name, make in (
        ("forward", _forward_parser),
        ("gradcheck", _gradcheck_parser),
        ("eval", _eval_parser),
        ("heatmap", _heatmap_parser),
        ("split", _split_parser),
        ("bench", _bench_parser),
        ("ablation", _ablation_parser),
        ("synth", _synth_parser),
    ):
        sub = make()
        subcommands.add_subcommand(name, sub, help=sub.description)
    return parser


def resolve_config(args: Namespace) -> NeckConfig:
    """Config file (or defaults) with command-line flags on top.

    Choosing ``fpn``/``pafpn`` on the command line turns the attention
    branches off unless ``--use-emsa``/``--use-ca`` are given too; choosing
    ``hafpn`` over a config without attention turns both on.
    """
    config = load_config(args.config) if args.config else NeckConfig()
    use_emsa, use_ca = args.use_emsa, args.use_ca
    flags_given = use_emsa is not None or use_ca is not None
    if args.variant in ("fpn", "pafpn"):
        use_emsa, use_ca = bool(use_emsa), bool(use_ca)
    elif args.variant == "hafpn" and not flags_given and not config.ham_enabled:
        use_emsa, use_ca = True, True
    return with_overrides(
        config,
        variant=args.variant,
        use_emsa=use_emsa,
        use_ca=use_ca,
        heads=args.heads,
        reduction=args.reduction,
        seed=args.seed,
    )


def _print_config(config: NeckConfig) -> None:
    print("# resolved neck config")
    print(config_to_text(config), end="")


def cmd_forward(args: Namespace) -> int:
    config = resolve_config(args)
    _print_config(config)
    image = load_tensor(args.input)
    if image.ndim != 4 or image.shape[:2] != (1, 3):
        raise ShapeError(f"{args.input}: expected (1, 3, H, W), got {image.shape}.")
    precision = "double" if image.dtype == np.float64 else "single"
    params = init_pyramid(config, image.shape[2:], precision)
    block = (lambda x: x) if args.identity_ham else None
    levels, _ = pyramid_forward(image, params, block)
    save_levels(levels, args.output)
    for name, shape in zip(LEVEL_NAMES, levels.shapes):
        print(f"{name}: {list(shape)}")
    return EXIT_OK


def cmd_gradcheck(args: Namespace) -> int:
    report = run_suite(args.scope, args.seed, args.num_seeds)
    print(report.to_string())
    if args.output:
        report.to_csv(args.output)
    failed = report.index[~report["passed"]].tolist()
    if failed:
        _logger.error(f"Gradient check failed for {failed}.")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_eval(args: Namespace) -> int:
    gt_dir = Path(args.gt)
    class_table = gt_dir / "classes.txt"
    index = read_index(
        gt_dir / "index.txt", class_table if class_table.exists() else None
    )
    report = evaluate(
        read_detections(args.input),
        load_ground_truth(index),
        index.classes,
        args.iou_thr,
        args.ap_mode,
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report.to_key_values())
    for c in report.classes:
        report.pr_curve_frame(c.class_id).to_csv(out_dir / f"pr_{c.name}.csv")
    print(report.to_frame().to_string())
    return EXIT_OK


def cmd_heatmap(args: Namespace) -> int:
    features = load_tensor(args.input)
    gray = write_pgm(args.output, features)
    if args.colormap:
        write_png(Path(args.output).with_suffix(".png"), features, args.colormap)
    print(f"{gray.shape[1]}x{gray.shape[0]} heatmap -> {args.output}")
    return EXIT_OK


def cmd_split(args: Namespace) -> int:
    if len(args.fractions) != 3:
        raise ValueError(f"Need train/val/test fractions, got {args.fractions}.")
    spec = SplitSpec(*args.fractions, seed=args.seed)
    for path in write_split(split_dataset(read_index(args.input), spec), args.output):
        print(path)
    return EXIT_OK


def cmd_bench(args: Namespace) -> int:
    if len(args.input_shape) != 4:
        raise ValueError(f"Input shape needs four sizes, got {args.input_shape}.")
    config = resolve_config(args)
    _print_config(config)
    _logger.info("Timings depend on the machine and load; not deterministic.")
    timings = bench_forward(config, tuple(args.input_shape), args.repeat)
    print(timings.to_string())
    if args.output:
        timings.to_csv(args.output)
    return EXIT_OK


def cmd_ablation(args: Namespace) -> int:
    config = resolve_config(args)
    _print_config(config)
    samples = make_defect_samples(
        args.num_images, tuple(args.size), seed=args.data_seed
    )
    reports = run_ablation(
        samples, config, classes=DEFAULT_CLASSES, iou_thr=args.iou_thr
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, report in reports.items():
        file_name = name.lower().replace("+", "_") + ".txt"
        (out_dir / file_name).write_text(report.to_key_values())
    summary = ablation_summary(reports)
    summary.to_csv(out_dir / "summary.csv")
    print(summary.to_string())
    return EXIT_OK


def cmd_synth(args: Namespace) -> int:
    samples = make_defect_samples(
        args.num_images, tuple(args.size), args.max_defects, args.seed
    )
    index = write_defect_dataset(samples, args.output)
    num_boxes = sum(len(s.boxes) for s in samples)
    print(f"{len(index.entries)} images, {num_boxes} boxes -> {args.output}")
    return EXIT_OK


COMMANDS = {
    "forward": cmd_forward,
    "gradcheck": cmd_gradcheck,
    "eval": cmd_eval,
    "heatmap": cmd_heatmap,
    "split": cmd_split,
    "bench": cmd_bench,
    "ablation": cmd_ablation,
    "synth": cmd_synth,
}


def _setup_environment(log_level: str) -> None:
    """Set log level."""
    setup_logger(log_level)


def main(argv: list[str] | None = None) -> int:
    """
    Command-line entry point.
    Parse flags, print the resolved arguments and run one subcommand.
    Exit codes: 0 success, 1 failed numeric check, 2 bad input or config
    (the parser itself exits with 2 on unknown flags).
    """
    parser = build_parser()
    cfg = parser.parse_args(sys.argv[1:] if argv is None else argv)
    _setup_environment(cfg.log_level)
    print(parser.dump(cfg), end="")
    command = cfg.command
    try:
        return COMMANDS[command](cfg[command])
    except (ValueError, OSError) as e:
        _logger.error(f"{command}: {e}")
        return EXIT_INPUT
