"""Console entry point: ``lpad synth|train|eval|transfer|sweep --config <path>``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from lpad.cli.commands import Command, run
from lpad.cli.config import parse_config
from lpad.core.exceptions import LpadError

logger = logging.getLogger("lpad")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpad", description="Latent-prior VAE anomaly detection on multichannel time series"
    )
    parser.add_argument("command", choices=sorted(Command.get_all_values()), help="What to run")
    parser.add_argument("--config", required=True, type=Path, help="Path to a key = value configuration file")
    parser.add_argument("--repeats", type=int, default=None, help="Independently seeded models (overrides 'repeats')")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (overrides 'output_dir')")
    parser.add_argument("--workers", type=int, default=1, help="Parallel worker processes for repeats and sweep cells")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging threshold",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = parse_config(args.config)
        overrides = {}
        if args.repeats is not None:
            overrides["repeats"] = args.repeats
        if args.out is not None:
            overrides["output_dir"] = args.out
        if overrides:
            cfg = cfg.with_overrides(**overrides)
        return run(cfg, Command(args.command), workers=args.workers)
    except LpadError as exc:
        logger.error("error=%s message=%s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
