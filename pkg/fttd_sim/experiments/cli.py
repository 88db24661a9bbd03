"""
Command-line entry point: ``fttd-sim <experiment> [options]``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any

from fttd_sim.config import ConfigManager, ExperimentKind
from fttd_sim.exceptions import (
    ConfigurationError,
    DegenerateSolutionError,
    FttdSimError,
)
from fttd_sim.experiments.runner import ExperimentRunner

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3


def parse_seeds(text: str) -> list[int]:
    """Parse ``"0,3,5-8"`` into ``[0, 3, 5, 6, 7, 8]``."""

    seeds: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        start, sep, stop = chunk.partition("-")
        try:
            if sep:
                low, high = int(start), int(stop)
                if high < low:
                    raise ValueError
                seeds.extend(range(low, high + 1))
            else:
                seeds.append(int(chunk))
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid seed list '{text}'") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", metavar="PATH", help="TOML or JSON file layered over the profile"
    )
    common.add_argument(
        "--profile",
        default="paper",
        help="Bundled parameter profile (paper or desk)",
    )
    common.add_argument(
        "--seed", type=parse_seeds, metavar="LIST", help="Seeds, e.g. 0-9 or 1,4,7"
    )
    common.add_argument("--out", metavar="PATH", help="CSV file or output directory")
    common.add_argument("--threads", type=int, metavar="N", help="Worker threads")
    common.add_argument(
        "--strict",
        action="store_true",
        default=None,
        help="Fail on degenerate solver output instead of annotating rows",
    )
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )

    parser = argparse.ArgumentParser(
        prog="fttd-sim", description="DS-FTTD wideband hybrid beamforming experiments"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKind:
        commands.add_parser(kind.value, parents=[common], help=f"Run the {kind.value} sweep")
    commands.add_parser("list", help="List experiment kinds and bundled profiles")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "experiment": args.command,
        "seeds": args.seed,
        "threads": args.threads,
        "output": args.out,
        "strict": args.strict,
    }


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        print("experiments:")
        for kind in ExperimentKind:
            print(f"  {kind.value}")
        print("profiles:")
        for name in ConfigManager().profiles():
            print(f"  {name}")
        return EXIT_OK

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        config = ConfigManager().load(
            args.profile, config_path=args.config, overrides=_overrides(args)
        )
        runner = ExperimentRunner(config)
        frame = runner.run()
        csv_path, manifest_path = runner.write(frame)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSolutionError as exc:
        print(f"degenerate solution on carriers {exc.carriers}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except FttdSimError as exc:
        logger.error("Experiment failed: %s", exc, exc_info=True)
        return EXIT_FAILURE

    print(f"wrote {len(frame)} rows to {csv_path} (manifest {manifest_path.name})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
