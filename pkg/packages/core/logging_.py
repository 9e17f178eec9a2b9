from __future__ import annotations

import logging
import sys
from logging.handlers import RotatingFileHandler

from packages.shared.paths import log_path, ensure_app_dirs

SOLVER_LOGGERS = (
    "packages.core.rd",
    "packages.core.region",
    "packages.core.hybrid",
)


def setup_logging(level: int = logging.INFO, verbose: bool = False) -> None:
    ensure_app_dirs()
    root = logging.getLogger()
    root.setLevel(level)

    if root.handlers:
        for h in root.handlers:
            h.setLevel(level)
        return

    fmt = logging.Formatter("%(asctime)s %(levelname)s %(name)s - %(message)s")

    # stdout carries command output, keep diagnostics on stderr
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(level)
    ch.setFormatter(fmt)
    root.addHandler(ch)

    fh = RotatingFileHandler(str(log_path()), maxBytes=2_000_000, backupCount=3, encoding="utf-8")
    fh.setLevel(logging.DEBUG if verbose else level)
    fh.setFormatter(fmt)
    root.addHandler(fh)

    if verbose:
        root.setLevel(logging.DEBUG)
        ch.setLevel(logging.DEBUG)
        for name in SOLVER_LOGGERS:
            logging.getLogger(name).setLevel(logging.DEBUG)
