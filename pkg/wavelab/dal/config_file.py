import hashlib
from pathlib import Path
from typing import Any, Optional, get_origin

from pydantic import ValidationError

from wavelab.handlers.utils.observability import logger
from wavelab.models.config import ExperimentConfig
from wavelab.models.exceptions import ConfigError

_LIST_KEYS = frozenset(name for name, field in ExperimentConfig.model_fields.items() if get_origin(field.annotation) is list)


def _parse_value(key: str, raw: str) -> Any:
    if key in _LIST_KEYS:
        inner = raw.strip().removeprefix('[').removesuffix(']')
        return [item.strip() for item in inner.split(',') if item.strip()]
    return raw.strip()


def parse_config_text(text: str, source: str = '<string>') -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment, lists are comma separated (brackets optional)."""
    values: dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split('#', 1)[0].strip()
        if not content:
            continue
        key, separator, raw = content.partition('=')
        key = key.strip()
        if not separator or not key:
            raise ConfigError(f'{source}:{number}: expected "key = value", got {line.strip()!r}')
        if key in values:
            raise ConfigError(f'{source}:{number}: duplicate key {key!r}')
        values[key] = _parse_value(key, raw)
    return values


def build_config(values: dict[str, Any], source: str = '<string>') -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f'{source}: invalid configuration: {exc}') from exc


def load_config(path: Optional[Path] = None, overrides: Optional[dict[str, Any]] = None) -> ExperimentConfig:
    """Read the experiment file (defaults only when path is None) and apply CLI overrides on top."""
    values: dict[str, Any] = {}
    source = '<defaults>'
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as exc:
            raise ConfigError(f'cannot read config file {path}: {exc}') from exc
        values = parse_config_text(text, source)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    cfg = build_config(values, source)
    logger.debug('configuration loaded', extra={'source': source, 'keys': sorted(values)})
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of every field, defaults included."""
    return hashlib.sha256(cfg.model_dump_json().encode('utf-8')).hexdigest()
