"""
Per-user files: the RunConfig store and the rotating log.

TWJSCC_HOME relocates both (tests point it at a temporary directory).
"""

from __future__ import annotations

import os
from pathlib import Path


def _home() -> Path:
    override = os.environ.get("TWJSCC_HOME")
    if override:
        return Path(override)
    appdata = os.environ.get("APPDATA")
    if appdata:
        return Path(appdata) / "TwoWayJSCC"
    return Path.home() / ".twjscc"


def config_path() -> Path:
    return _home() / "config.json"


def log_path() -> Path:
    return _home() / "logs" / "twjscc.log"


def ensure_app_dirs() -> None:
    log_path().parent.mkdir(parents=True, exist_ok=True)
