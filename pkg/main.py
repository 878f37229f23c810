"""Main entry point for BeamEngineer"""

import argparse
import logging
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%H:%M:%S'
)
logger = logging.getLogger(__name__)

from src.cli import cmd_baseline, cmd_eval, cmd_gen, cmd_selftest, cmd_sweep, cmd_train
from src.config import ConfigManager
from src.errors import BeamEngineerError


def build_parser() -> argparse.ArgumentParser:
    """Subcommands with the shared --config/--set/--log-level options"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="config.yaml", help="YAML or key=value configuration file")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="Override a configuration key, e.g. decoder.eta=0.02 (repeatable)",
    )
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(description="Learned QoS multicast beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Write a dataset of sampled instances")
    gen.add_argument("--out", required=True, help="Dataset path (.bin for binary, text otherwise)")
    gen.add_argument("--count", type=int, default=None)
    gen.add_argument("--seed", type=int, default=None)

    train = sub.add_parser("train", parents=[common], help="Train a model and write its checkpoint")
    train.add_argument("--out", required=True, help="Checkpoint directory")
    train.add_argument("--ablation-r0", action="store_true", help="Also train the r_train=0 variant")

    evaluate = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint on a dataset")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--r-max", type=int, default=None)
    evaluate.add_argument("--out", default=None, help="Per-instance CSV")

    baseline = sub.add_parser("baseline", parents=[common], help="Run zero-forcing or CCP on a dataset")
    baseline.add_argument("--dataset", required=True)
    baseline.add_argument("--which", choices=["zf", "ccp"], required=True)
    baseline.add_argument("--out", default=None, help="Per-instance CSV")

    sweep = sub.add_parser("sweep", parents=[common], help="Evaluate a checkpoint across K, M or gamma")
    sweep.add_argument("--checkpoint", required=True)
    sweep.add_argument("--axis", choices=["K", "M", "gamma"], required=True)
    sweep.add_argument("--values", required=True, help="a..b, a..b:step or a comma list")
    sweep.add_argument("--count", type=int, default=None)
    sweep.add_argument("--out", default=None, help="One CSV row per axis value")

    selftest = sub.add_parser("selftest", help="Run the property test suite")
    selftest.add_argument("pytest_args", nargs=argparse.REMAINDER)
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "selftest":
        return cmd_selftest(args.pytest_args)

    config = ConfigManager(args.config, args.overrides)

    # Configure logging level from config
    log_level = (args.log_level or config.get("logging.level", "INFO")).upper()
    logging.getLogger().setLevel(getattr(logging, log_level, logging.INFO))
    logger.debug(f"Logging level set to: {log_level}")

    if args.command == "gen":
        cmd_gen(config, args.out, args.count, args.seed)
    elif args.command == "train":
        cmd_train(config, args.out, args.ablation_r0)
    elif args.command == "eval":
        cmd_eval(config, args.checkpoint, args.dataset, args.r_max, args.out)
    elif args.command == "baseline":
        cmd_baseline(config, args.dataset, args.which, args.out)
    elif args.command == "sweep":
        cmd_sweep(config, args.checkpoint, args.axis, args.values, args.out, args.count)
    return 0


def main(argv=None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except BeamEngineerError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"Error: {e}")
        return 1
    except KeyboardInterrupt:
        print("\nInterrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
