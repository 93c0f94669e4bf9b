from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from wavelab.models.exceptions import WavelabError
from wavelab.models.grid import Grid


class CommandOutcome(BaseModel):
    """What one subcommand hands back to the CLI: the stdout summary, files written and manifest extras."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    summary: dict[str, Any]
    outputs: list[Path] = Field(default_factory=list)
    grid: Optional[Grid] = None
    manifest_extra: dict[str, Any] = Field(default_factory=dict)
    deferred_error: Optional[WavelabError] = None  # raised after the outputs and the manifest are on disk
