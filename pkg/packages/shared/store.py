from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional, Type, TypeVar, Union

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from packages.core.hybrid.types import HybridScheme
from packages.shared.config import Model, ModelFile, RunConfig, SchemeFile
from packages.shared.errors import ModelFileError, TwjsccError
from packages.shared.paths import config_path, ensure_app_dirs

log = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)
PathLike = Union[str, Path]


class ConfigStore:
    """RunConfig defaults kept as JSON in the application data directory."""

    def __init__(self, path: Optional[PathLike] = None) -> None:
        if path is None:
            ensure_app_dirs()
            self._path = config_path()
        else:
            self._path = Path(path)

    def load(self) -> RunConfig:
        """Stored config, or defaults (written back) when the file is missing or unreadable."""
        if not self._path.exists():
            cfg = RunConfig()
            self.save(cfg)
            return cfg

        try:
            raw = self._path.read_text(encoding="utf-8")
            data: Any = json.loads(raw)
            return RunConfig.model_validate(data)
        except Exception as exc:
            log.warning(f"Unreadable config at {self._path} ({exc}), using defaults")
            cfg = RunConfig()
            self.save(cfg)
            return cfg

    def load_strict(self) -> RunConfig:
        return read_json(self._path, RunConfig)

    def save(self, cfg: RunConfig) -> None:
        self._path.write_text(cfg.model_dump_json(indent=2), encoding="utf-8")

    def path(self) -> str:
        return str(self._path)


def read_json(path: PathLike, model: Type[M]) -> M:
    p = Path(path)
    try:
        data: Any = json.loads(p.read_text(encoding="utf-8"))
        return model.model_validate(data)
    except FileNotFoundError:
        raise ModelFileError(f"{p}: no such file")
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{p}: invalid JSON ({exc})")
    except PydanticValidationError as exc:
        raise ModelFileError(f"{p}: {exc.error_count()} invalid field(s): {exc.errors()[0]['msg']}")


def load_model(path: PathLike) -> Model:
    mf = read_json(path, ModelFile)
    try:
        return mf.to_model()
    except TwjsccError as exc:
        raise ModelFileError(f"{path}: {exc}")


def save_model(model: Model, path: PathLike) -> None:
    Path(path).write_text(ModelFile.from_model(model).model_dump_json(indent=2), encoding="utf-8")


def load_scheme(path: PathLike) -> HybridScheme:
    sf = read_json(path, SchemeFile)
    try:
        return sf.to_scheme()
    except TwjsccError as exc:
        raise ModelFileError(f"{path}: {exc}")


def save_scheme(scheme: HybridScheme, path: PathLike) -> None:
    Path(path).write_text(SchemeFile.from_scheme(scheme).model_dump_json(indent=2), encoding="utf-8")
