from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError as PydanticValidationError

from packages.core.logging_ import setup_logging
from packages.shared.config import RunConfig
from packages.shared.errors import (
    ConvergenceError,
    GridGuardError,
    InfeasibleDistortionError,
    ModelFileError,
    TwjsccError,
    ValidationError,
)
from packages.shared.models import resolve_model
from packages.shared.store import ConfigStore

from . import commands
from .commands import EXIT_NUMERICAL, EXIT_USAGE, parse_pair

log = logging.getLogger(__name__)

# flag name -> RunConfig field
OVERRIDES = {
    "rate": "rate",
    "grid": "grid",
    "tol": "tol",
    "max_iter": "max_iter",
    "seed": "seed",
    "samples": "samples",
    "threads": "threads",
    "resolution": "resolution",
    "restarts": "restarts",
    "budget": "budget",
    "tol_hyp": "tol_hyp",
    "tol_region": "tol_region",
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--model", default="example1", help="model JSON path or canned model name")
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("--config", default=None, help="RunConfig JSON; explicit flags override it")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--rate", default=None, help="K/N source symbols per channel use")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="iteration cap per solver run")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--tol-hyp", dest="tol_hyp", type=float, default=None)
    p.add_argument("--tol-region", dest="tol_region", type=float, default=None)
    return p


def build_parser() -> Parser:
    common = _common()
    parser = Parser(prog="twjscc", description="Two-way joint source-channel coding toolbox")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    for name, text in (
        ("rd", "rate-distortion curve of one source"),
        ("cond-rd", "conditional rate-distortion curve"),
        ("wz-rd", "Wyner-Ziv rate-distortion curve (upper estimate)"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--user", type=int, choices=(1, 2), default=1)

    p = sub.add_parser("capacity", parents=[common], help="inner/outer capacity bounds of the channel")
    p.add_argument("--bound", choices=("inner", "outer", "both"), default="inner")

    p = sub.add_parser("hybrid", parents=[common], help="evaluate a hybrid scheme or search for one")
    p.add_argument("--scheme", default=None, help="scheme JSON path or a scheme name stored in the model")
    p.add_argument("--target", type=parse_pair, default=None, help="target distortions D1,D2")
    p.add_argument("--budget", type=int, default=None)

    sub.add_parser("region", parents=[common], help="distortion region report")
    sub.add_parser("example1", parents=[common], help="end-to-end report on the worked binary example")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    cfg = ConfigStore(args.config).load_strict() if args.config else RunConfig()
    overrides = {field: getattr(args, flag) for flag, field in OVERRIDES.items() if getattr(args, flag, None) is not None}
    if not overrides:
        return cfg
    return RunConfig.model_validate({**cfg.model_dump(), **overrides})


def dispatch(args: argparse.Namespace, cfg: RunConfig) -> int:
    if args.command == "example1":
        return commands.cmd_example1(cfg, args.out)

    model = resolve_model(args.model)
    if args.command == "rd":
        return commands.cmd_rd(model, cfg, args.out, args.user)
    if args.command == "cond-rd":
        return commands.cmd_cond_rd(model, cfg, args.out, args.user)
    if args.command == "wz-rd":
        return commands.cmd_wz_rd(model, cfg, args.out, args.user)
    if args.command == "capacity":
        return commands.cmd_capacity(model, cfg, args.out, args.bound)
    if args.command == "hybrid":
        return commands.cmd_hybrid(model, cfg, args.out, args.scheme, args.target)
    return commands.cmd_region(model, cfg, args.out)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    setup_logging(verbose=args.verbose)

    try:
        cfg = run_config(args)
        return dispatch(args, cfg)
    except ConvergenceError as exc:
        log.error(f"{args.command}: {exc}")
        print(json.dumps(exc.diagnostic()), file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ModelFileError, InfeasibleDistortionError, GridGuardError, PydanticValidationError) as exc:
        log.error(f"{args.command}: {exc}")
        return EXIT_USAGE
    except TwjsccError as exc:
        log.error(f"{args.command}: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
