"""
config/loader.py
Run configuration: flat key=value files (dotenv syntax, # comments) merged
with command-line overrides. Precedence: flags > file > defaults.

Keys are ModelConfig and TrainConfig field names plus `preset`
(full | desk | tiny, default desk) choosing the model defaults.
"""
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ValidationError

from config.settings import settings
from model.config import PRESETS, ModelConfig
from tensor_core import InvalidInputError
from tensor_core.checkpoint import atomic_write_bytes
from trainer.config import TrainConfig

LIST_KEYS = {"languages"}


class RunConfig(BaseModel):
    preset: str
    model:  ModelConfig
    train:  TrainConfig

    def snapshot(self) -> dict[str, str]:
        """Flat, fully resolved key -> value view."""
        flat: dict[str, str] = {"preset": self.preset}
        for section in (self.model, self.train):
            for key, value in section.model_dump().items():
                flat[key] = ",".join(value) if isinstance(value, list) else str(value)
        return flat

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.snapshot().items())

    def write(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.to_text().encode("utf-8"))


def read_config_file(path: Path) -> dict[str, str]:
    from dotenv import dotenv_values
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"config file not found: {path}")
    return {k: v for k, v in dotenv_values(path).items() if v is not None}


def _coerce(key: str, value: Any) -> Any:
    if key in LIST_KEYS and isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def load_run_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    merged: dict[str, Any] = {}
    if path is not None:
        merged.update(read_config_file(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    preset = str(merged.pop("preset", "desk"))
    if preset not in PRESETS:
        raise InvalidInputError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")

    model_keys = set(ModelConfig.model_fields)
    train_keys = set(TrainConfig.model_fields)
    unknown = sorted(set(merged) - model_keys - train_keys)
    if unknown:
        raise InvalidInputError(f"unknown configuration keys: {unknown}")

    model_values = {k: _coerce(k, v) for k, v in merged.items() if k in model_keys}
    train_values = {k: _coerce(k, v) for k, v in merged.items() if k in train_keys}
    model_values.setdefault("precision", settings.precision)
    train_values.setdefault("seed", settings.seed)

    try:
        base = PRESETS[preset].model_dump()
        model = ModelConfig.model_validate({**base, **model_values})
        train = TrainConfig.model_validate(train_values)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise InvalidInputError(f"invalid configuration [{where}]: {first.get('msg')}") from exc
    return RunConfig(preset=preset, model=model, train=train)
