from pathlib import Path
from typing import Mapping, Optional

from wavelab import __version__
from wavelab.models.config import ExperimentConfig
from wavelab.models.grid import Grid

MANIFEST_NAME = 'manifest.txt'


def write_manifest(
    directory: Path,
    command: str,
    cfg: ExperimentConfig,
    config_hash: str,
    wall_time: float,
    grid: Optional[Grid] = None,
    outputs: tuple[Path, ...] = (),
    extra: Optional[Mapping[str, object]] = None,
) -> Path:
    """Plain ``key: value`` record of one CLI run next to its CSVs."""
    lines = [
        f'wavelab_version: {__version__}',
        f'command: {command}',
        f'config_sha256: {config_hash}',
        f'profile: {cfg.profile}',
        f'scheme: {cfg.scheme.value} dt={cfg.dt:g} T={cfg.T:g} sample_every={cfg.sample_every}',
    ]
    if grid is not None:
        lines.append(f'grid: z_min={grid.z_min:g} z_max={grid.z_max:g} n={grid.n} h={grid.h:g} origin={grid.origin:g}')
    lines.append(f'wall_time_seconds: {wall_time:.3f}')
    lines.extend(f'{key}: {value}' for key, value in (extra or {}).items())
    lines.extend(f'output: {path.name}' for path in outputs)
    lines.append(f'config: {cfg.model_dump_json()}')
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / MANIFEST_NAME
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path
